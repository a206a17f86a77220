#pragma once
// Unnormalized Kaehler-Ricci flow on rotationally symmetric S^2.
//
// In the conformal gauge the flow d/dt g = -Ric is the scalar PDE
//   d/dt w = -K/2,  equivalently  d/dt psi = Delta_round(w) - 1,  psi = exp(2w),
// and the area obeys Vol(t) = Vol(0) - 4 pi t exactly, so the extinction time
// is T = Vol(0) / (4 pi). The solver advances psi, which makes the discrete
// area law a linear invariant of the RK4 step.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "krf/geom2d.hpp"

namespace krf {

struct FlowOptions {
  /// RK4 step bound: dt <= cfl * min(psi) * h^2 (linear stability ends near 1.39).
  double cfl = 0.5;
  /// Store every `stride` accepted steps (the final state is always stored).
  std::size_t stride = 40;
  /// Fractions of T at which a slice is stored exactly (in addition to the stride).
  std::vector<double> checkpoints;
};

/// Time-stamped sequence of metrics of one flow. Immutable.
class FlowTrajectory {
 public:
  FlowTrajectory(std::vector<double> times, std::vector<MetricProfile> profiles, double t_exact,
                 double step_size);

  const Grid& grid() const { return profiles_.front().grid(); }
  const GridPtr& grid_ptr() const { return profiles_.front().grid_ptr(); }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  double time(std::size_t k) const { return times_[k]; }
  const MetricProfile& profile(std::size_t k) const { return profiles_[k]; }
  const std::vector<MetricProfile>& profiles() const { return profiles_; }
  /// Gauss curvature (= Kaehler scalar curvature R) of slice k.
  const ScalarField& curvature(std::size_t k) const { return curvature_[k]; }
  double extinction_time() const { return t_exact_; }
  double step_size() const { return step_; }
  double first_time() const { return times_.front(); }
  double last_time() const { return times_.back(); }
  /// sup over slices of max |K| (T - t).
  double type1_sup() const { return type1_sup_; }

  /// Index k with times[k] <= t < times[k+1] (clamped to the last interval).
  std::size_t bracket(double t) const;
  /// Conformal factor at time t. Between slices the normalised factor
  /// psi / (T - t) is interpolated by cubic Hermite using d/dt psi = -K psi,
  /// which is exact on the shrinking round sphere.
  std::vector<double> conformal_factor_at(double t) const;
  /// Curvature at time t: linear interpolation of K (T - t) between slices.
  std::vector<double> curvature_at(double t) const;
  MetricProfile profile_at(double t) const;

  nlohmann::json to_json() const;
  static FlowTrajectory from_json(const nlohmann::json& j);
  /// FNV-1a hash of the serialised snapshot; identifies a trajectory in exports.
  std::string content_hash() const;

 private:
  void check_time(double t) const;

  std::vector<double> times_;
  std::vector<MetricProfile> profiles_;
  std::vector<ScalarField> curvature_;
  double t_exact_;
  double step_;
  double type1_sup_ = 0.0;
  mutable std::string hash_;
};

double extinction_time(const MetricProfile& m0);

/// Integrate from m0 up to t_max_fraction * T with max step `step`.
FlowTrajectory evolve(const MetricProfile& m0, double t_max_fraction, double step,
                      const FlowOptions& options = {});

double type1_constant(const FlowTrajectory& traj);

/// Normalised flow g~(s) = T g(t) / (T - t), s = -T ln(1 - t/T).
struct NormalizedView {
  std::vector<double> s;
  std::vector<MetricProfile> profiles;
  double extinction_time;
};
NormalizedView normalized_view(const FlowTrajectory& traj);
double normalized_time(double t, double t_exact);

/// Blow-up g_i(s) = (T - t_i)^{-1} g(t_i + s (T - t_i)) restricted to the
/// rescaled window [s_lo, s_hi]. The rescaled flow dies at s = 1.
/// The window always contains s = 0 as an (interpolated) slice.
FlowTrajectory blowup_sequence(const FlowTrajectory& traj, double t_i, double s_lo = -1.0,
                               double s_hi = 0.5);

/// |v|^2_{g(s)} <= (T - t)/(T - s) |v|^2_{g(t)} for t < s whenever
/// K (T - t) >= -1 on [t, s].
struct MetricComparison {
  double ratio;        ///< max_theta psi(s)/psi(t) * (T - s)/(T - t); <= 1 expected
  double min_lower_curvature;  ///< min over slices in [t, s] of K (T - t)
  bool applicable;     ///< hypothesis K (T - t) >= -1 held
};
MetricComparison metric_comparison_check(const FlowTrajectory& traj, double t, double s);

/// Per-slice diagnostics of the flow: max K (T - t) and pole-to-pole meridian
/// length divided by sqrt(T - t).
struct FlowBounds {
  std::vector<double> times;
  std::vector<double> scalar_scaled;
  std::vector<double> diameter_scaled;
};
FlowBounds flow_bounds(const FlowTrajectory& traj);

/// Initial data helpers.
MetricProfile round_profile(std::size_t n_nodes, double w_const = 0.0);
MetricProfile cosine_profile(std::size_t n_nodes, double amplitude);

}  // namespace krf
