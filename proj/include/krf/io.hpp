#pragma once
// Persistence: snapshot and profile JSON, CSV exports with a config-hash
// header. Floats are printed with 17 significant digits so every export
// round-trips exactly; output is byte-stable for identical inputs.

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "krf/conjheat.hpp"
#include "krf/flow.hpp"
#include "krf/geom2d.hpp"
#include "krf/lgeo.hpp"
#include "krf/perelman.hpp"

namespace krf {

std::string fmt17(double x);

using Meta = std::vector<std::pair<std::string, std::string>>;

/// Lines: "# config_hash=<h>", one "# key=value" per meta entry, the column row,
/// then data rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash, const Meta& meta,
            const std::vector<std::string>& columns);
  void row(std::span<const double> values);
  void row(std::initializer_list<double> values) { row(std::span(values.begin(), values.size())); }

 private:
  std::ofstream out_;
  std::size_t width_;
};

/// Whole file as text; MissingInputError when absent.
std::string read_text(const std::filesystem::path& path);
std::string file_hash(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

void write_snapshot(const std::filesystem::path& path, const FlowTrajectory& traj);
FlowTrajectory read_snapshot(const std::filesystem::path& path);

MetricProfile read_profile(const std::filesystem::path& path);

/// Flow summary: t, Vol, K_min, K_max, w_min, w_max per stored slice.
void write_flow_csv(const std::filesystem::path& path, const FlowTrajectory& traj,
                    const std::string& config_hash);

/// Columns t, theta, u, f, mass for every stride-th slice (and the last).
/// Metadata: t_i, theta_p, eps, trajectory hash, extinction time.
void write_solution_csv(const std::filesystem::path& path, const ConjugateSolution& sol,
                        const std::string& config_hash, std::size_t stride = 1);
/// Rebuilds the solution with metrics taken from the trajectory.
ConjugateSolution read_solution_csv(const std::filesystem::path& path,
                                    const FlowTrajectory& traj);

void write_entropy_csv(const std::filesystem::path& path, const std::vector<EntropyRecord>& rows,
                       const std::string& config_hash, const Meta& meta = {});

/// One row per (t, theta_q) with the per-node residuals of l~ and its argmin base.
void write_field_csv(const std::filesystem::path& path, const ReducedDistanceField& field,
                     const InequalityResiduals& residuals, const std::string& config_hash,
                     const Meta& meta = {});

}  // namespace krf
