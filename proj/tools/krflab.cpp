// krflab: command-line front end to the Kaehler-Ricci flow experiments.
//
//   krflab flow       --config C [--out DIR]
//   krflab heatback   --config C --traj trajectory.json [--out DIR]
//   krflab entropy    --config C --traj trajectory.json --sol solution.csv [--out DIR]
//   krflab lgeo       --config C --traj trajectory.json [--out DIR]
//   krflab acceptance --config C [--out DIR]
//
// Exit codes: 0 success, 2 config error, 3 missing input, 4 numerical failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "krf/config.hpp"
#include "krf/error.hpp"
#include "krf/recipes.hpp"

namespace fs = std::filesystem;

namespace {

int report(const krf::RunManifest& m) {
  for (const auto& c : m.checks) {
    std::printf("[%s] criterion %2d %-38s %s\n", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                c.detail.c_str());
  }
  for (const auto& a : m.artifacts) std::printf("wrote %s\n", a.c_str());
  std::printf("config_hash=%s wall=%.2fs\n", m.config_hash.c_str(), m.wall_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kaehler-Ricci flow lab on rotationally symmetric S^2"};
  app.require_subcommand(1);
  std::string config_path, out_dir, traj_path, sol_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--out", out_dir, "output directory (overrides out_dir)");
  };
  auto* flow = app.add_subcommand("flow", "evolve the initial metric to near extinction");
  auto* heat = app.add_subcommand("heatback", "backward conjugate heat solve on a stored flow");
  auto* ent = app.add_subcommand("entropy", "W, v and Harnack diagnostics of a stored solution");
  auto* lgeo = app.add_subcommand("lgeo", "reduced distance fields on a stored flow");
  auto* acc = app.add_subcommand("acceptance", "run the acceptance suite twice");
  for (auto* s : {flow, heat, ent, lgeo, acc}) add_common(s);
  for (auto* s : {heat, ent, lgeo}) s->add_option("--traj", traj_path, "trajectory snapshot JSON");
  ent->add_option("--sol", sol_path, "solution CSV written by heatback");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    krf::ExperimentConfig cfg = config_path.empty() ? krf::ExperimentConfig{} : krf::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    auto need = [](const std::string& p, const char* flag) {
      if (p.empty()) throw krf::MissingInputError(std::string(flag) + " is required");
      return fs::path(p);
    };

    if (flow->parsed()) return report(krf::cmd_flow(cfg));
    if (heat->parsed()) return report(krf::cmd_heatback(cfg, need(traj_path, "--traj")));
    if (ent->parsed()) {
      return report(krf::cmd_entropy(cfg, need(traj_path, "--traj"), need(sol_path, "--sol")));
    }
    if (lgeo->parsed()) return report(krf::cmd_lgeo(cfg, need(traj_path, "--traj")));
    const auto m = krf::cmd_acceptance(cfg);
    report(m);
    return m.all_pass() ? 0 : 1;
  } catch (const krf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const krf::MissingInputError& e) {
    std::fprintf(stderr, "missing input: %s\n", e.what());
    return 3;
  } catch (const krf::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
