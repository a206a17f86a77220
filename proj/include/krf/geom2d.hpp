#pragma once
// Rotationally symmetric metrics on S^2 in the conformal gauge
//   g = exp(2 w(theta)) * g_round,
// discretised on a cell-centred colatitude grid. Pointwise quantities follow
// the Kaehler conventions used across the library:
//   R = K (Gauss curvature), Delta = 1/2 Delta_riem, |grad f|^2 = 1/2 |df|^2_riem,
//   |v|^2 = 2 |v|^2_riem for tangent vectors, dV = Riemannian area element.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

namespace krf {

/// Uniform cell-centred grid theta_j = (j + 1/2) h, h = pi / N. The poles are
/// cell faces, so even reflection there gives w'(0) = w'(pi) = 0 for free.
class Grid {
 public:
  static constexpr std::size_t kMinNodes = 4;

  /// Shared instance per size; throws DegenerateGridError below kMinNodes.
  static std::shared_ptr<const Grid> make(std::size_t n_nodes);

  explicit Grid(std::size_t n_nodes);

  std::size_t size() const { return theta_.size(); }
  double spacing() const { return h_; }
  double theta(std::size_t j) const { return theta_[j]; }
  std::span<const double> thetas() const { return theta_; }

  /// Exact band areas cos(theta_{j-1/2}) - cos(theta_{j+1/2}); they sum to 2.
  std::span<const double> cell_weights() const { return weight_; }
  std::span<const double> inv_cell_weights() const { return inv_weight_; }
  /// Face coefficients sin(theta_{j-1/2}) / h and sin(theta_{j+1/2}) / h.
  std::span<const double> lower_faces() const { return lower_; }
  std::span<const double> upper_faces() const { return upper_; }

  bool operator==(const Grid& other) const { return size() == other.size(); }

 private:
  double h_;
  std::vector<double> theta_;
  std::vector<double> weight_;
  std::vector<double> inv_weight_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Node values on a grid (curvature, density, potential, ...).
class ScalarField {
 public:
  ScalarField(GridPtr grid, std::vector<double> values);
  ScalarField(GridPtr grid, double constant);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }

  double min() const;
  double max() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// exp(2w) * g_round. Immutable; construction validates finiteness and
/// rejects collapsed metrics (exp(2w) < 1e-12 anywhere).
class MetricProfile {
 public:
  static constexpr double kCollapseThreshold = 1e-12;

  MetricProfile(GridPtr grid, std::vector<double> w);
  /// From the conformal factor psi = exp(2w) instead of w.
  static MetricProfile from_conformal_factor(GridPtr grid, std::span<const double> psi);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return w_.size(); }
  std::span<const double> w() const { return w_; }
  std::span<const double> conformal_factor() const { return psi_; }

  /// Scale the metric by a constant factor (w -> w + ln(c)/2).
  MetricProfile scaled(double factor) const;

  nlohmann::json to_json() const;
  static MetricProfile from_json(const nlohmann::json& j);

 private:
  GridPtr grid_;
  std::vector<double> w_;
  std::vector<double> psi_;
};

/// Round-sphere Laplacian of node values, (1/sin) d/dtheta (sin dphi/dtheta).
void round_laplacian(const Grid& grid, std::span<const double> phi, std::span<double> out);

/// Centred theta-derivative with even reflection at the poles.
std::vector<double> theta_derivative(const Grid& grid, std::span<const double> phi);
/// Centred second theta-derivative with even reflection at the poles.
std::vector<double> theta_second_derivative(const Grid& grid, std::span<const double> phi);

ScalarField gauss_curvature(const MetricProfile& m);
ScalarField laplacian(const MetricProfile& m, const ScalarField& phi);
ScalarField grad_norm_sq(const MetricProfile& m, const ScalarField& phi);

/// Integral of phi against the area element of m.
double integrate(const MetricProfile& m, std::span<const double> phi);
double volume(const MetricProfile& m);

/// Length of the meridian arc theta1 -> theta2 (theta1 <= theta2).
double meridian_distance(const MetricProfile& m, double theta1, double theta2);

/// Piecewise-linear interpolation of node values at colatitude theta, with
/// even reflection across the poles.
double sample(const Grid& grid, std::span<const double> values, double theta);

/// Fold an arbitrary great-circle coordinate onto colatitude [0, pi].
double fold_colatitude(double angle);

}  // namespace krf
