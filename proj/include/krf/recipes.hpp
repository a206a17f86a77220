#pragma once
// Experiment recipes behind the CLI verbs, and the acceptance suite.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "krf/config.hpp"
#include "krf/flow.hpp"
#include "krf/lgeo.hpp"

namespace krf {

struct CheckResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;  ///< measured values against their thresholds
  double measured = 0.0;   ///< headline value of the check
  double threshold = 0.0;  ///< the bound it is compared with
};

struct RunManifest {
  std::string verb;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> inputs;  ///< path, FNV-1a of contents
  std::vector<std::string> artifacts;
  double wall_seconds = 0.0;
  std::vector<CheckResult> checks;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

MetricProfile initial_profile(const ExperimentConfig& cfg);
/// Evolves the configured profile, storing every checkpoint the recipes need.
FlowTrajectory run_flow(const ExperimentConfig& cfg, const MetricProfile& m0);

LFieldOptions field_options(const ExperimentConfig& cfg);

RunManifest cmd_flow(const ExperimentConfig& cfg);
RunManifest cmd_heatback(const ExperimentConfig& cfg, const std::filesystem::path& traj_path);
RunManifest cmd_entropy(const ExperimentConfig& cfg, const std::filesystem::path& traj_path,
                        const std::filesystem::path& sol_path);
RunManifest cmd_lgeo(const ExperimentConfig& cfg, const std::filesystem::path& traj_path);

/// Criteria 1-10 on a round and a cos-perturbed run; CSVs go to `dir`.
std::vector<CheckResult> run_acceptance_suite(const ExperimentConfig& cfg,
                                              const std::filesystem::path& dir);
/// Runs the suite twice (run1/, run2/ under the output directory) and adds
/// criterion 11: byte-identical CSVs across the two runs.
RunManifest cmd_acceptance(const ExperimentConfig& cfg);

/// Writes <out_dir>/manifest_<verb>.json.
void write_manifest(const ExperimentConfig& cfg, const RunManifest& m);

}  // namespace krf
