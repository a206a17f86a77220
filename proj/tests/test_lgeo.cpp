#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "krf/conjheat.hpp"
#include "krf/error.hpp"
#include "krf/flow.hpp"
#include "krf/geom2d.hpp"
#include "krf/lgeo.hpp"

using namespace krf;
using std::numbers::pi;

namespace {

FlowTrajectory run(double amplitude) {
  FlowOptions opt;
  opt.checkpoints = {0.2, 0.4, 0.5, 0.9, 0.99, 0.999};
  const auto m0 = amplitude == 0.0 ? round_profile(128) : cosine_profile(128, amplitude);
  return evolve(m0, 0.999, 2e-3, opt);
}

// Independent evaluation of L for a curve given at uniform sigma nodes:
// L = int_0^{sigma_m} [2 s^2 R + psi theta_s^2] ds with theta linear between
// nodes and flow data taken at 16 Gauss-free midpoints per interval.
double quadrature_L(const FlowTrajectory& traj, const std::vector<double>& theta, double t_i,
                    double t) {
  const std::size_t n = theta.size() - 1;
  const double h = std::sqrt(t_i - t) / n;
  const int sub = 16;
  double L = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double slope = (theta[k + 1] - theta[k]) / h;
    for (int m = 0; m < sub; ++m) {
      const double r = (m + 0.5) / sub;
      const double s = (k + r) * h;
      const double th = fold_colatitude(theta[k] + r * (theta[k + 1] - theta[k]));
      const double time = t_i - s * s;
      const auto psi = traj.conformal_factor_at(time);
      const auto K = traj.curvature_at(time);
      const auto& g = traj.grid();
      L += (2 * s * s * sample(g, K, th) + sample(g, psi, th) * slope * slope) * h / sub;
    }
  }
  return L;
}

// Round flow, constant curve: int_0^{sm} 2 s^2 / (a + s^2) ds, a = T - t_i.
double constant_curve_closed(double T, double t_i, double t) {
  const double a = T - t_i, sm = std::sqrt(t_i - t);
  return 2 * (sm - std::sqrt(a) * std::atan(sm / std::sqrt(a)));
}

}  // namespace

TEST_CASE("constant curve at the pole of the round flow") {
  const auto traj = run(0.0);
  for (double t_i : {0.9, 0.99}) {
    for (double t : {0.0, 0.5}) {
      const double exact = constant_curve_closed(1.0, t_i, t);
      CHECK(round_constant_curve_L(1.0, t_i, t) == doctest::Approx(exact).epsilon(1e-14));
      const std::vector<double> pole(65, 0.0);
      CHECK(std::abs(L_functional(traj, pole, {0.0, t_i}, t) - exact) < 1e-6);
    }
  }
}

TEST_CASE("L of a moving curve agrees with an independent quadrature") {
  const auto traj = run(0.2);
  const double T = traj.extinction_time();
  const double t_i = 0.9 * T, t = 0.2 * T;
  std::vector<double> theta(33);
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = 0.4 + 1.5 * k / 32.0 + 0.2 * std::sin(0.3 * k);
  const double L = L_functional(traj, theta, {0.4, t_i}, t);
  CHECK(L == doctest::Approx(quadrature_L(traj, theta, t_i, t)).epsilon(2e-3));
}

TEST_CASE("minimiser is stationary, beats perturbations and matches the lattice") {
  const auto traj = run(0.2);
  const double T = traj.extinction_time();
  const BasePoint base{0.7, 0.9 * T};
  const double q = 2.3, t = 0.3 * T;
  const auto r = minimize_L(traj, base, q, t);
  CHECK(r.converged);
  CHECK(r.stationarity < 1e-6);
  CHECK(r.theta.front() == base.theta);
  CHECK(fold_colatitude(r.theta.back()) == doctest::Approx(q));
  CHECK(r.L_value <= r.lattice_value + 1e-12);
  CHECK(r.L_value == doctest::Approx(quadrature_L(traj, r.theta, base.t_i, t)).epsilon(2e-3));
  for (std::size_t k : {5, 16, 27}) {
    auto bumped = r.theta;
    bumped[k] += 0.01;
    CHECK(L_functional(traj, bumped, base, t) > r.L_value);
  }
  const double lat = lattice_oracle_L(traj, base, q, t);
  CHECK(std::abs(lat - r.L_value) / r.L_value < 0.02);
  CHECK(reduced_distance(r) == doctest::Approx(r.L_value / (2 * std::sqrt(base.t_i - t))));
  CHECK_THROWS(reduced_distance(1.0, 0.5, 0.5));
}

TEST_CASE("L~ is the minimum over base samples") {
  const auto traj = run(0.2);
  const double T = traj.extinction_time();
  const auto bases = colatitude_grid(5);
  CHECK(bases.front() == 0.0);
  CHECK(bases.back() == doctest::Approx(pi));
  const auto tv = tilde_L(traj, 1.0, 0.2 * T, 0.9 * T, bases);
  for (double b : bases) CHECK(tv.L <= minimize_L(traj, {b, 0.9 * T}, 1.0, 0.2 * T).L_value + 1e-12);
  CHECK(tv.argmin < bases.size());
}

TEST_CASE("l(pole) tends to 1 as t_i tends to T on the round flow") {
  const auto traj = run(0.0);
  const std::vector<double> fr{0.99, 0.999, 0.9999};
  FlowOptions opt;
  opt.checkpoints = fr;
  const auto deep = evolve(round_profile(64), 0.9999, 1e-3, opt);
  const auto pl = pole_limit(deep, fr, 0.0);
  REQUIRE(pl.l.size() == 3);
  // 32 transcription intervals resolve the 1/(T - s) peak to about 1e-5.
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = constant_curve_closed(1.0, pl.t_i[i], 0.0) / (2 * std::sqrt(pl.t_i[i]));
    CHECK(pl.l[i] == doctest::Approx(exact).epsilon(1e-4));
  }
  CHECK(std::abs(pl.extrapolated - 1.0) < 1e-2);
  // a + b h + c h^2 is reproduced exactly.
  const std::vector<double> ti{0.9, 0.96, 0.99};
  std::vector<double> v(3);
  for (int i = 0; i < 3; ++i) {
    const double h = std::sqrt(1.0 - ti[i]);
    v[i] = 1.0 + 2 * h + 3 * h * h;
  }
  CHECK(richardson_sqrt(ti, v, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fields: L~ monotone in t_i, sqrt bound, f <= l") {
  const auto traj = run(0.2);
  const double T = traj.extinction_time();
  LFieldOptions opt;
  opt.t_fractions = {0.0, 0.2, 0.4};
  opt.n_q = 7;
  opt.base_thetas = colatitude_grid(5);
  const auto f1 = build_field(traj, 0.9 * T, opt);
  const auto f2 = build_field(traj, 0.99 * T, opt);
  CHECK(f1.n_t() == 3);
  CHECK(f1.n_q() == 7);
  CHECK(f1.L_base.size() == 5);
  for (std::size_t i = 0; i < f1.L_tilde.size(); ++i) {
    double lo = f1.L_base[0][i];
    for (const auto& b : f1.L_base) lo = std::min(lo, b[i]);
    CHECK(f1.L_tilde[i] == lo);
  }
  CHECK(tilde_monotonicity_check(f1, f2) >= -1e-6);
  CHECK(tilde_bound_check(f1, traj).max_excess <= 0.0);

  const double t_i = 0.9 * T;
  const double eps = 0.1 * (T - t_i);
  auto sol = solve_backward(traj, t_i, delta_terminal(traj.profile_at(t_i), 0.0, eps));
  sol.base_theta = 0.0;
  CHECK(f_le_l_check(sol, f1).min_slack >= -1e-2);

  LFieldOptions one = opt;
  one.base_thetas = {opt.base_thetas[2]};
  const auto single = build_field(traj, 0.9 * T, one);
  for (std::size_t i = 0; i < single.L_tilde.size(); ++i) CHECK(single.L_tilde[i] == f1.L_base[2][i]);

  opt.t_fractions = {0.0, 0.95};
  CHECK_THROWS_AS(build_field(traj, 0.9 * T, opt), RangeError);
}

TEST_CASE("l inequalities on the round flow and the exploratory report") {
  const auto traj = run(0.0);
  LFieldOptions opt;
  opt.t_fractions = {0.0, 0.1, 0.2, 0.3, 0.4};
  opt.n_q = 17;
  opt.base_thetas = colatitude_grid(9);
  const auto f = build_field(traj, 0.9, opt);
  const auto res = perelman_l_inequalities(f, f.l_base(0), traj, 1e-2);
  CHECK(res.assessed > 0);
  CHECK(res.fraction_ok() >= 0.95);
  CHECK(res.r1.size() == f.L_tilde.size());
  const auto q = question_experiment(f, traj, 1e-2);
  CHECK(q.reduced_volume.size() == f.n_t());
  for (double v : q.reduced_volume) CHECK(std::isfinite(v));
}
