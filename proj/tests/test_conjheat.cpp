#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "krf/conjheat.hpp"
#include "krf/error.hpp"
#include "krf/flow.hpp"

using namespace krf;
using std::numbers::pi;

namespace {

FlowTrajectory round_run() {
  FlowOptions opt;
  opt.checkpoints = {0.5, 0.9};
  return evolve(round_profile(128), 0.99, 1e-3, opt);
}

FlowTrajectory perturbed_run() {
  FlowOptions opt;
  opt.checkpoints = {0.5, 0.9, 0.95, 0.99};
  return evolve(cosine_profile(128, 0.2), 0.99, 2e-3, opt);
}

ScalarField uniform(const MetricProfile& m) { return ScalarField(m.grid_ptr(), 1.0 / volume(m)); }

}  // namespace

TEST_CASE("uniform data on the round flow stays 1 / Vol(t)") {
  const auto traj = round_run();
  const auto sol = solve_backward(traj, 0.9, uniform(traj.profile_at(0.9)));
  for (std::size_t k = 0; k < sol.size(); ++k) {
    for (double u : sol.u(k)) CHECK(u == doctest::Approx(1 / (4 * pi * (1 - sol.time(k)))).epsilon(1e-11));
  }
  CHECK(sol.terminal_time() == 0.9);
}

TEST_CASE("first harmonic decays backward as (1 - t_i) / (1 - t)") {
  // u = (1 + a(t) cos) / (4 pi (1 - t)) solves the conjugate equation on the
  // shrinking round sphere when a(t) (1 - t) is constant.
  const auto traj = round_run();
  const double t_i = 0.9, a_i = 0.5;
  const auto& g = traj.grid();
  std::vector<double> u(g.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = (1 + a_i * std::cos(g.theta(j))) / (4 * pi * (1 - t_i));
  const auto sol = solve_backward(traj, t_i, ScalarField(traj.grid_ptr(), u));
  double err = 0.0;
  for (double t : {0.0, 0.5}) {
    const std::size_t k = sol.index_of(t);
    const double a = a_i * (1 - t_i) / (1 - t);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double exact = (1 + a * std::cos(g.theta(j))) / (4 * pi * (1 - t));
      err = std::max(err, std::abs(sol.u(k)[j] - exact) * 4 * pi * (1 - t));
    }
  }
  CHECK(err < 1e-3);
}

TEST_CASE("mass is conserved and positivity kept from a pole bump") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const double t_i = 0.99 * T;
  const auto bump = delta_terminal(traj.profile_at(t_i), 0.0, 0.1 * (T - t_i));
  const auto sol = solve_backward(traj, t_i, bump);
  for (std::size_t k = 0; k < sol.size(); ++k) {
    CHECK(std::abs(sol.mass(k) - 1.0) < 1e-12);
    CHECK(sol.u_field(k).min() > 0.0);
  }
}

TEST_CASE("delta terminal data is normalised and only sits at a pole") {
  const auto m = cosine_profile(128, 0.2);
  for (double p : {0.0, pi}) {
    const auto b = delta_terminal(m, p, 0.05);
    CHECK(integrate(m, b.values()) == doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK_THROWS_AS(delta_terminal(m, 1.0, 0.05), RangeError);
  CHECK_THROWS_AS(delta_terminal(m, 0.0, 0.0), ResolutionError);
  CHECK_THROWS_AS(delta_terminal(m, 0.0, 1e-9), ResolutionError);
}

TEST_CASE("terminal data is validated") {
  const auto traj = round_run();
  const auto m = traj.profile_at(0.5);
  CHECK_THROWS_AS(solve_backward(traj, 0.5, ScalarField(m.grid_ptr(), 1.0)), NormalizationError);
  CHECK_THROWS_AS(solve_backward(traj, 0.999, uniform(m)), RangeError);
  std::vector<double> bad(m.size(), 1.0 / volume(m));
  bad[0] = -1.0;
  CHECK_THROWS_AS(solve_backward(traj, 0.5, ScalarField(m.grid_ptr(), bad)), NormalizationError);
}

TEST_CASE("duality with the forward heat flow") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const auto sol = solve_backward(traj, 0.9 * T, delta_terminal(traj.profile_at(0.9 * T), pi, 0.01));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  const auto& g = traj.grid();
  std::vector<double> phi(g.size());
  const double c1 = n01(rng), c2 = n01(rng);
  for (std::size_t j = 0; j < phi.size(); ++j) {
    const double c = std::cos(g.theta(j));
    phi[j] = c1 * c + c2 * c * c;
  }
  const auto rep = duality_check(traj, ScalarField(traj.grid_ptr(), phi), sol);
  CHECK(rep.pairing.size() == sol.size());
  CHECK(rep.drift < 1e-12);
}

TEST_CASE("candidate members converge and the extrapolation keeps unit mass") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const auto cand = admissible_candidate(traj, {0.9, 0.95, 0.99}, 0.0);
  REQUIRE(cand.members.size() == 3);
  CHECK(cand.increments.size() == 2);
  CHECK(cand.increments[1] < cand.increments[0]);
  const auto ex = extrapolated_candidate(cand);
  CHECK(ex.terminal_time() == doctest::Approx(0.95 * T));
  CHECK(ex.times().back() <= 0.9 * T * (1 + 1e-12));
  for (std::size_t k = 0; k < ex.size(); ++k) CHECK(std::abs(ex.mass(k) - 1.0) < 1e-12);
  CHECK_THROWS_AS(admissible_candidate(traj, {0.9, 0.95}, 0.0), RangeError);
  CHECK_THROWS_AS(admissible_candidate(traj, {0.95, 0.9, 0.99}, 0.0), RangeError);
}

TEST_CASE("rescaling keeps the mass and scales u by T - t_i") {
  const auto traj = round_run();
  const auto sol = solve_backward(traj, 0.99, uniform(traj.profile_at(0.99)));
  const auto r = rescale_solution(sol, 0.5, -1.0, 0.5);
  const std::size_t k = r.index_of(0.0);
  CHECK(r.u(k)[0] == doctest::Approx(0.5 * sol.u(sol.index_of(0.5))[0]).epsilon(1e-12));
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(r.mass(i) - 1.0) < 1e-12);
  CHECK(r.extinction_time() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("f vanishes on the round soliton") {
  const auto traj = round_run();
  const auto sol = solve_backward(traj, 0.9, uniform(traj.profile_at(0.9)));
  const auto f = f_of(sol, sol.index_of(0.5));
  CHECK(std::abs(f.max()) < 1e-10);
  CHECK(std::abs(f.min()) < 1e-10);
  CHECK_THROWS_AS(sol.index_of(0.123456), RangeError);
}
