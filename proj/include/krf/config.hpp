#pragma once
// Experiment configuration: flat key=value text, one key per line, '#'
// comments. Unknown keys and malformed values are ConfigErrors naming the key.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace krf {

struct Tolerances {
  double mass = 1e-6;      // conjugate mass and duality drift
  double exact = 1e-5;     // round closed forms and the area law
  double soliton = 1e-5;   // v, W, dW/dt and r1 + r2 on the round soliton
  double W_mono = 1e-7;    // adjacent W decrease
  double v = 1e-3;         // max v on the candidate
  double dW_rel = 1e-3;    // formula vs finite difference
  double admiss = 1e-3;    // admissibility residual, in units of 1/2 max R
  double harnack = 0.05;   // |M/m - 1| at 0.95 T
  double rho = 1e-6;       // decrease of rho_max
  double rho_final = 1.05;
  double L_oracle = 1e-6;
  double pole = 1e-2;
  double lattice = 0.02;
  double tilde_mono = 1e-6;
  double fl = 1e-2;
  double ineq = 1e-2;
  double ineq_share = 0.95;
};

struct ExperimentConfig {
  std::size_t n_nodes = 256;
  std::string profile = "cos";  // round | cos | file
  double amplitude = 0.2;
  std::filesystem::path profile_file;
  double step = 1e-3;
  double t_max_fraction = 0.9999;
  std::vector<double> schedule{0.95, 0.99, 0.999, 0.9999};
  std::vector<double> uniqueness_schedule{0.9, 0.99, 0.999};
  double base_theta = 0.0;
  double eps_factor = 0.1;
  std::string terminal = "delta";  // delta | uniform
  std::size_t export_stride = 20;
  std::vector<double> lgeo_t_i{0.9, 0.99};
  std::vector<double> lgeo_times{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3,
                                 0.35, 0.4, 0.45, 0.5, 0.55, 0.6};
  std::size_t n_q = 33;
  std::size_t n_bases = 33;
  std::size_t intervals = 32;
  std::size_t lattice_theta = 64;
  Tolerances tol;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 12345;

  /// Canonical key=value dump (sorted keys, 17 significant digits), without
  /// out_dir and unset paths.
  std::string canonical() const;
  /// FNV-1a of canonical().
  std::string hash() const;
};

ExperimentConfig parse_config(const std::string& text);
/// Missing file is a MissingInputError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checkpoint fractions every recipe relies on being stored exactly.
std::vector<double> required_checkpoints(const ExperimentConfig& cfg);

}  // namespace krf
