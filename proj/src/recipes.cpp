#include "krf/recipes.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "krf/conjheat.hpp"
#include "krf/error.hpp"
#include "krf/io.hpp"
#include "krf/lgeo.hpp"
#include "krf/perelman.hpp"

namespace krf {

namespace fs = std::filesystem;

bool RunManifest::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["verb"] = verb;
  j["config_hash"] = config_hash;
  j["inputs"] = nlohmann::json::array();
  for (const auto& [path, hash] : inputs) j["inputs"].push_back({{"path", path}, {"hash", hash}});
  j["artifacts"] = artifacts;
  j["wall_seconds"] = wall_seconds;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return j;
}

void write_manifest(const ExperimentConfig& cfg, const RunManifest& m) {
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / ("manifest_" + m.verb + ".json"), m.to_json());
}

MetricProfile initial_profile(const ExperimentConfig& cfg) {
  if (cfg.profile == "round") return round_profile(cfg.n_nodes);
  if (cfg.profile == "cos") return cosine_profile(cfg.n_nodes, cfg.amplitude);
  auto m = read_profile(cfg.profile_file);
  if (m.size() < 64) throw ConfigError("config key 'profile_file': profile has fewer than 64 nodes");
  return m;
}

FlowTrajectory run_flow(const ExperimentConfig& cfg, const MetricProfile& m0) {
  FlowOptions opt;
  opt.checkpoints = required_checkpoints(cfg);
  return evolve(m0, cfg.t_max_fraction, cfg.step, opt);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunManifest start(const std::string& verb, const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  RunManifest m;
  m.verb = verb;
  m.config_hash = cfg.hash();
  return m;
}

std::string artifact(RunManifest& m, const fs::path& p) {
  m.artifacts.push_back(p.string());
  return p.string();
}

}  // namespace

RunManifest cmd_flow(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  RunManifest m = start("flow", cfg);
  if (cfg.profile == "file") m.inputs.emplace_back(cfg.profile_file.string(), file_hash(cfg.profile_file));
  const FlowTrajectory traj = run_flow(cfg, initial_profile(cfg));
  const fs::path snap = cfg.out_dir / "trajectory.json";
  write_snapshot(snap, traj);
  artifact(m, snap);
  const fs::path csv = cfg.out_dir / "flow.csv";
  write_flow_csv(csv, traj, m.config_hash);
  artifact(m, csv);
  m.wall_seconds = seconds_since(t0);
  write_manifest(cfg, m);
  return m;
}

RunManifest cmd_heatback(const ExperimentConfig& cfg, const fs::path& traj_path) {
  const auto t0 = Clock::now();
  RunManifest m = start("heatback", cfg);
  const FlowTrajectory traj = read_snapshot(traj_path);
  m.inputs.emplace_back(traj_path.string(), file_hash(traj_path));
  const double T = traj.extinction_time();
  const fs::path sol_csv = cfg.out_dir / "solution.csv";
  if (cfg.terminal == "uniform") {
    const double t_i = cfg.schedule.back() * T;
    const MetricProfile mt = traj.profile_at(t_i);
    const ScalarField uniform(mt.grid_ptr(), 1.0 / volume(mt));
    const auto sol = solve_backward(traj, t_i, uniform);
    write_solution_csv(sol_csv, sol, m.config_hash, cfg.export_stride);
    artifact(m, sol_csv);
  } else {
    const auto cand = admissible_candidate(traj, cfg.schedule, cfg.base_theta, cfg.eps_factor);
    write_solution_csv(sol_csv, cand.candidate(), m.config_hash, cfg.export_stride);
    artifact(m, sol_csv);
    const fs::path ext_csv = cfg.out_dir / "candidate.csv";
    write_solution_csv(ext_csv, extrapolated_candidate(cand), m.config_hash, cfg.export_stride);
    artifact(m, ext_csv);
    const fs::path inc_csv = cfg.out_dir / "schedule.csv";
    CsvWriter inc(inc_csv, m.config_hash,
                  {{"converging", cand.converging ? "true" : "false"},
                   {"warning", cand.warning.empty() ? "none" : cand.warning}},
                  {"t_i", "eps", "increment_to_next"});
    for (std::size_t i = 0; i < cand.members.size(); ++i) {
      inc.row({cand.terminal_times[i], cand.members[i].epsilon,
               i < cand.increments.size() ? cand.increments[i] : std::nan("")});
    }
    artifact(m, inc_csv);
  }
  m.wall_seconds = seconds_since(t0);
  write_manifest(cfg, m);
  return m;
}

RunManifest cmd_entropy(const ExperimentConfig& cfg, const fs::path& traj_path,
                        const fs::path& sol_path) {
  const auto t0 = Clock::now();
  RunManifest m = start("entropy", cfg);
  const FlowTrajectory traj = read_snapshot(traj_path);
  m.inputs.emplace_back(traj_path.string(), file_hash(traj_path));
  const ConjugateSolution sol = read_solution_csv(sol_path, traj);
  m.inputs.emplace_back(sol_path.string(), file_hash(sol_path));
  if (sol.size() < 2) throw MissingInputError("solution needs at least two slices");
  const double T = traj.extinction_time();
  auto rows = entropy_report(sol, T);
  fill_soliton_residuals(rows, sol, T);
  const fs::path csv = cfg.out_dir / "entropy.csv";
  write_entropy_csv(csv, rows, m.config_hash,
                    {{"t_i", fmt17(sol.terminal_time())}, {"T_exact", fmt17(T)}});
  artifact(m, csv);
  m.wall_seconds = seconds_since(t0);
  write_manifest(cfg, m);
  return m;
}

LFieldOptions field_options(const ExperimentConfig& cfg) {
  LFieldOptions o;
  o.t_fractions = cfg.lgeo_times;
  o.n_q = cfg.n_q;
  o.base_thetas = colatitude_grid(cfg.n_bases);
  o.geo.intervals = cfg.intervals;
  o.geo.lattice_theta = cfg.lattice_theta;
  return o;
}

RunManifest cmd_lgeo(const ExperimentConfig& cfg, const fs::path& traj_path) {
  const auto t0 = Clock::now();
  RunManifest m = start("lgeo", cfg);
  const FlowTrajectory traj = read_snapshot(traj_path);
  m.inputs.emplace_back(traj_path.string(), file_hash(traj_path));
  const double T = traj.extinction_time();
  const fs::path summary_csv = cfg.out_dir / "lgeo_summary.csv";
  CsvWriter summary(summary_csv, m.config_hash, {},
                    {"t_i", "unconverged", "C", "max_bound_excess", "sup_l_tilde",
                     "violation_ineq1", "violation_ineq2", "min_increase_from_previous"});
  const fs::path volume_csv = cfg.out_dir / "reduced_volume.csv";
  CsvWriter vol(volume_csv, m.config_hash, {}, {"t_i", "t", "V_tilde"});
  std::vector<ReducedDistanceField> fields;
  for (std::size_t i = 0; i < cfg.lgeo_t_i.size(); ++i) {
    fields.push_back(build_field(traj, cfg.lgeo_t_i[i] * T, field_options(cfg)));
    const auto& f = fields.back();
    const auto q = question_experiment(f, traj, cfg.tol.ineq);
    const fs::path csv = cfg.out_dir / ("field_" + std::to_string(i) + ".csv");
    write_field_csv(csv, f, q.residuals, m.config_hash, {{"t_i", fmt17(f.t_i)}});
    artifact(m, csv);
    const auto bound = tilde_bound_check(f, traj);
    const double mono = i == 0 ? std::nan("") : tilde_monotonicity_check(fields[i - 1], f);
    summary.row({f.t_i, static_cast<double>(f.unconverged), bound.C, bound.max_excess,
                 bound.sup_l_tilde, q.violation_fraction1, q.violation_fraction2, mono});
    for (std::size_t it = 0; it < f.n_t(); ++it) vol.row({f.t_i, f.times[it], q.reduced_volume[it]});
  }
  artifact(m, summary_csv);
  artifact(m, volume_csv);
  m.wall_seconds = seconds_since(t0);
  write_manifest(cfg, m);
  return m;
}

}  // namespace krf
