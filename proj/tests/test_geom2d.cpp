#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "krf/error.hpp"
#include "krf/flow.hpp"
#include "krf/geom2d.hpp"

using namespace krf;
using std::numbers::pi;

namespace {

std::vector<double> cos_values(const Grid& g, double a) {
  std::vector<double> w(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) w[j] = a * std::cos(g.theta(j));
  return w;
}

}  // namespace

TEST_CASE("grid weights integrate sin theta exactly") {
  const auto g = Grid::make(64);
  double s = 0.0;
  for (double w : g->cell_weights()) s += w;
  CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g->theta(0) == doctest::Approx(0.5 * pi / 64));
  CHECK_THROWS_AS(Grid(2), DegenerateGridError);
}

TEST_CASE("round sphere: area 4 pi, curvature 1, meridian length") {
  const auto m = round_profile(128);
  CHECK(volume(m) == doctest::Approx(4 * pi).epsilon(1e-13));
  const auto K = gauss_curvature(m);
  CHECK(K.min() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(K.max() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(meridian_distance(m, 0.3, 2.1) == doctest::Approx(1.8).epsilon(1e-10));
}

TEST_CASE("scaling the metric by c scales area by c and curvature by 1/c") {
  const auto m = round_profile(64, 0.5 * std::log(3.0));
  CHECK(volume(m) == doctest::Approx(12 * pi).epsilon(1e-12));
  CHECK(gauss_curvature(m).max() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("curvature of exp(2a cos) g_round converges at second order") {
  // K = e^{-2w} (1 - Delta_round w) and Delta_round cos = -2 cos.
  const double a = 0.2;
  double prev = 0.0;
  for (std::size_t n : {64, 128, 256}) {
    const auto g = Grid::make(n);
    const MetricProfile m(g, cos_values(*g, a));
    const auto K = gauss_curvature(m);
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = std::cos(g->theta(j));
      err = std::max(err, std::abs(K[j] - std::exp(-2 * a * c) * (1 + 2 * a * c)));
    }
    if (prev > 0.0) CHECK(prev / err > 3.5);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("area of exp(2a cos) g_round matches 2 pi sinh(2a) / a") {
  const double a = 0.3;
  const auto g = Grid::make(512);
  const MetricProfile m(g, cos_values(*g, a));
  CHECK(volume(m) == doctest::Approx(2 * pi * std::sinh(2 * a) / a).epsilon(1e-5));
}

TEST_CASE("Gauss-Bonnet: total curvature is 4 pi for any profile") {
  const auto g = Grid::make(256);
  std::vector<double> w(g->size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double c = std::cos(g->theta(j));
    w[j] = 0.1 * c + 0.05 * c * c * c - 0.2 * c * c;
  }
  const MetricProfile m(g, w);
  const auto K = gauss_curvature(m);
  CHECK(integrate(m, K.values()) == doctest::Approx(4 * pi).epsilon(1e-12));
}

TEST_CASE("round Laplacian of cos is -2 cos and is conservative") {
  const auto g = Grid::make(256);
  const auto phi = cos_values(*g, 1.0);
  std::vector<double> out(g->size());
  round_laplacian(*g, phi, out);
  double err = 0.0, total = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    err = std::max(err, std::abs(out[j] + 2 * phi[j]));
    total += g->cell_weights()[j] * out[j];
  }
  CHECK(err < 1e-3);
  CHECK(std::abs(total) < 1e-13);
}

TEST_CASE("grad norm uses the Kaehler normalisation") {
  // |grad phi|^2 = 1/2 phi'^2 / psi; on round, phi = cos gives sin^2 / 2.
  const auto m = round_profile(256);
  const auto& g = m.grid();
  const ScalarField phi(m.grid_ptr(), cos_values(g, 1.0));
  const auto gn = grad_norm_sq(m, phi);
  for (std::size_t j = 10; j < g.size() - 10; j += 37) {
    const double s = std::sin(g.theta(j));
    CHECK(gn[j] == doctest::Approx(0.5 * s * s).epsilon(1e-3));
  }
}

TEST_CASE("sample interpolates and fold_colatitude reflects through the poles") {
  const auto g = Grid::make(128);
  const auto phi = cos_values(*g, 1.0);
  CHECK(sample(*g, phi, 1.0) == doctest::Approx(std::cos(1.0)).epsilon(1e-4));
  CHECK(fold_colatitude(-0.3) == doctest::Approx(0.3));
  CHECK(fold_colatitude(pi + 0.4) == doctest::Approx(pi - 0.4));
  CHECK(fold_colatitude(2 * pi + 0.1) == doctest::Approx(0.1));
}

TEST_CASE("profile validation") {
  const auto g = Grid::make(16);
  CHECK_THROWS_AS(MetricProfile(g, std::vector<double>(15, 0.0)), DimensionError);
  std::vector<double> w(16, 0.0);
  w[3] = std::nan("");
  CHECK_THROWS_AS(MetricProfile(g, w), DegenerateMetricError);
  CHECK_THROWS_AS(round_profile(16).scaled(-1.0), DegenerateMetricError);
  const auto m = round_profile(16, 0.1);
  const auto back = MetricProfile::from_json(m.to_json());
  for (std::size_t j = 0; j < 16; ++j) CHECK(back.w()[j] == m.w()[j]);
}
