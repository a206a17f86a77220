#include "krf/geom2d.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "krf/error.hpp"
#include "krf/simd/kernels.hpp"

namespace krf {

using std::numbers::pi;

Grid::Grid(std::size_t n_nodes) {
  if (n_nodes < kMinNodes) {
    throw DegenerateGridError("grid needs at least " + std::to_string(kMinNodes) +
                              " nodes to resolve the poles, got " + std::to_string(n_nodes));
  }
  h_ = pi / static_cast<double>(n_nodes);
  theta_.resize(n_nodes);
  weight_.resize(n_nodes);
  inv_weight_.resize(n_nodes);
  lower_.resize(n_nodes);
  upper_.resize(n_nodes);
  for (std::size_t j = 0; j < n_nodes; ++j) {
    const double a = h_ * static_cast<double>(j);
    const double b = h_ * static_cast<double>(j + 1);
    theta_[j] = h_ * (static_cast<double>(j) + 0.5);
    // 2 sin(mid) sin(half-width) is cos(a) - cos(b) without the cancellation.
    weight_[j] = 2.0 * std::sin(theta_[j]) * std::sin(0.5 * h_);
    inv_weight_[j] = 1.0 / weight_[j];
    lower_[j] = j == 0 ? 0.0 : std::sin(a) / h_;
    upper_[j] = j + 1 == n_nodes ? 0.0 : std::sin(b) / h_;
  }
  // Mirror the coefficients so the discrete operators commute exactly with
  // theta -> pi - theta.
  for (std::size_t j = 0; j < n_nodes / 2; ++j) {
    const std::size_t r = n_nodes - 1 - j;
    weight_[r] = weight_[j];
    inv_weight_[r] = inv_weight_[j];
    lower_[r] = upper_[j];
    upper_[r] = lower_[j];
  }
}

std::shared_ptr<const Grid> Grid::make(std::size_t n_nodes) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const Grid>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n_nodes);
  if (it != cache.end()) return it->second;
  auto g = std::make_shared<const Grid>(n_nodes);
  cache.emplace(n_nodes, g);
  return g;
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) {
    throw DimensionError("field has " + std::to_string(values_.size()) + " values on a " +
                         std::to_string(grid_->size()) + "-node grid");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in scalar field");
  }
}

ScalarField::ScalarField(GridPtr grid, double constant)
    : ScalarField(grid, std::vector<double>(grid->size(), constant)) {}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

MetricProfile::MetricProfile(GridPtr grid, std::vector<double> w)
    : grid_(std::move(grid)), w_(std::move(w)) {
  if (w_.size() != grid_->size()) {
    throw DimensionError("profile has " + std::to_string(w_.size()) + " values on a " +
                         std::to_string(grid_->size()) + "-node grid");
  }
  psi_.resize(w_.size());
  for (std::size_t j = 0; j < w_.size(); ++j) {
    if (!std::isfinite(w_[j])) throw DegenerateMetricError("non-finite conformal exponent");
    psi_[j] = std::exp(2.0 * w_[j]);
    if (psi_[j] < kCollapseThreshold) {
      throw DegenerateMetricError("metric collapse at theta=" + std::to_string(grid_->theta(j)));
    }
  }
}

MetricProfile MetricProfile::from_conformal_factor(GridPtr grid, std::span<const double> psi) {
  std::vector<double> w(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    if (!(psi[j] >= kCollapseThreshold)) {
      throw DegenerateMetricError("metric collapse at theta=" + std::to_string(grid->theta(j)));
    }
    w[j] = 0.5 * std::log(psi[j]);
  }
  return MetricProfile(std::move(grid), std::move(w));
}

MetricProfile MetricProfile::scaled(double factor) const {
  if (!(factor > 0.0)) throw DegenerateMetricError("metric scale factor must be positive");
  const double shift = 0.5 * std::log(factor);
  std::vector<double> w(w_);
  for (double& x : w) x += shift;
  return MetricProfile(grid_, std::move(w));
}

nlohmann::json MetricProfile::to_json() const {
  return nlohmann::json{{"n_nodes", w_.size()}, {"w", w_}};
}

MetricProfile MetricProfile::from_json(const nlohmann::json& j) {
  const auto n = j.at("n_nodes").get<std::size_t>();
  auto w = j.at("w").get<std::vector<double>>();
  if (w.size() != n) throw DimensionError("n_nodes does not match length of w");
  return MetricProfile(Grid::make(n), std::move(w));
}

void round_laplacian(const Grid& grid, std::span<const double> phi, std::span<double> out) {
  if (phi.size() != grid.size() || out.size() != grid.size()) {
    throw DimensionError("round_laplacian: size mismatch");
  }
  simd::kernels().flux_stencil(grid.lower_faces(), grid.upper_faces(), grid.inv_cell_weights(),
                               phi, out);
}

std::vector<double> theta_derivative(const Grid& grid, std::span<const double> phi) {
  const std::size_t n = grid.size();
  const double inv2h = 0.5 / grid.spacing();
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = j == 0 ? phi[0] : phi[j - 1];
    const double hi = j + 1 == n ? phi[n - 1] : phi[j + 1];
    d[j] = (hi - lo) * inv2h;
  }
  return d;
}

std::vector<double> theta_second_derivative(const Grid& grid, std::span<const double> phi) {
  const std::size_t n = grid.size();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = j == 0 ? phi[0] : phi[j - 1];
    const double hi = j + 1 == n ? phi[n - 1] : phi[j + 1];
    d[j] = (hi - 2.0 * phi[j] + lo) * inv_h2;
  }
  return d;
}

namespace {

void require_same_grid(const MetricProfile& m, const ScalarField& phi) {
  if (!(m.grid() == phi.grid())) {
    throw DimensionError("field grid (" + std::to_string(phi.size()) +
                         " nodes) does not match metric grid (" + std::to_string(m.size()) + ")");
  }
}

}  // namespace

ScalarField gauss_curvature(const MetricProfile& m) {
  const std::size_t n = m.size();
  std::vector<double> lap(n);
  round_laplacian(m.grid(), m.w(), lap);
  const auto psi = m.conformal_factor();
  for (std::size_t j = 0; j < n; ++j) lap[j] = (1.0 - lap[j]) / psi[j];
  return ScalarField(m.grid_ptr(), std::move(lap));
}

ScalarField laplacian(const MetricProfile& m, const ScalarField& phi) {
  require_same_grid(m, phi);
  std::vector<double> out(m.size());
  round_laplacian(m.grid(), phi.values(), out);
  const auto psi = m.conformal_factor();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= 0.5 / psi[j];
  return ScalarField(m.grid_ptr(), std::move(out));
}

ScalarField grad_norm_sq(const MetricProfile& m, const ScalarField& phi) {
  require_same_grid(m, phi);
  auto d = theta_derivative(m.grid(), phi.values());
  const auto psi = m.conformal_factor();
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = 0.5 * d[j] * d[j] / psi[j];
  return ScalarField(m.grid_ptr(), std::move(d));
}

double integrate(const MetricProfile& m, std::span<const double> phi) {
  if (phi.size() != m.size()) throw DimensionError("integrate: size mismatch");
  return 2.0 * pi * simd::kernels().weighted_dot(m.grid().cell_weights(), m.conformal_factor(), phi);
}

double volume(const MetricProfile& m) {
  return 2.0 * pi * simd::kernels().weighted_sum(m.grid().cell_weights(), m.conformal_factor());
}

double meridian_distance(const MetricProfile& m, double theta1, double theta2) {
  if (theta1 > theta2) throw RangeError("meridian_distance expects theta1 <= theta2");
  const Grid& g = m.grid();
  const auto w = m.w();
  const std::size_t n = g.size();
  // Breakpoints of the piecewise-linear w: poles plus cell centres. On each
  // linear piece the integral of exp(w) is exact.
  auto exact_piece = [](double a, double b, double wa, double wb) {
    const double dw = wb - wa;
    if (std::abs(dw) < 1e-12) return (b - a) * std::exp(0.5 * (wa + wb));
    return (b - a) * (std::exp(wb) - std::exp(wa)) / dw;
  };
  auto w_at = [&](double th) { return sample(g, w, th); };

  theta1 = std::clamp(theta1, 0.0, pi);
  theta2 = std::clamp(theta2, 0.0, pi);
  std::vector<double> knots{theta1};
  for (std::size_t j = 0; j < n; ++j) {
    if (g.theta(j) > theta1 && g.theta(j) < theta2) knots.push_back(g.theta(j));
  }
  knots.push_back(theta2);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    total += exact_piece(knots[k], knots[k + 1], w_at(knots[k]), w_at(knots[k + 1]));
  }
  return total;
}

double fold_colatitude(double angle) {
  double a = std::fmod(std::abs(angle), 2.0 * pi);
  if (a > pi) a = 2.0 * pi - a;
  return a;
}

double sample(const Grid& grid, std::span<const double> values, double theta) {
  const std::size_t n = grid.size();
  const double x = fold_colatitude(theta) / grid.spacing() - 0.5;
  if (x <= 0.0) return values[0];
  if (x >= static_cast<double>(n - 1)) return values[n - 1];
  const auto j = static_cast<std::size_t>(x);
  const double frac = x - static_cast<double>(j);
  return values[j] + frac * (values[j + 1] - values[j]);
}

}  // namespace krf
