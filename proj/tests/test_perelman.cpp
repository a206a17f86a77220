#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "krf/conjheat.hpp"
#include "krf/error.hpp"
#include "krf/flow.hpp"
#include "krf/perelman.hpp"

using namespace krf;
using std::numbers::pi;

namespace {

FlowTrajectory perturbed_run() {
  FlowOptions opt;
  opt.checkpoints = {0.5, 0.75, 0.9, 0.95, 0.99, 0.999};
  return evolve(cosine_profile(128, 0.2), 0.999, 2e-3, opt);
}

ConjugateSolution round_soliton() {
  FlowOptions opt;
  opt.checkpoints = {0.5, 0.9};
  const auto traj = evolve(round_profile(64), 0.99, 1e-3, opt);
  const auto m = traj.profile_at(0.99);
  return solve_backward(traj, 0.99, ScalarField(m.grid_ptr(), 1.0 / volume(m)));
}

}  // namespace

TEST_CASE("round soliton: v, W, dW/dt and soliton residuals vanish") {
  const auto sol = round_soliton();
  for (std::size_t k = 0; k < sol.size(); k += 7) {
    for (double v : v_field(sol, k).values()) CHECK(std::abs(v) < 1e-10);
    CHECK(std::abs(entropy_W(sol, k)) < 1e-10);
    CHECK(std::abs(w_derivative(sol, k).formula) < 1e-10);
    CHECK(harnack_ratio(sol, k) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto res = soliton_residual(rescale_solution(sol, 0.5, 0.0, 0.5));
  CHECK(res.r1 + res.r2 < 1e-12);
}

TEST_CASE("W with a mismatched reference time is x - ln x - 1") {
  // u = 1/(4 pi tau), f = ln(tau / tau'), R = 1/tau, so W = x - ln x - 1, x = tau'/tau.
  const auto sol = round_soliton();
  const std::size_t k = sol.index_of(0.5);
  for (double t_ref : {0.8, 1.0, 1.7}) {
    const double x = (t_ref - 0.5) / 0.5;
    CHECK(entropy_W(sol, k, t_ref) == doctest::Approx(x - std::log(x) - 1).epsilon(1e-10));
  }
  CHECK_THROWS_AS(entropy_W(sol, k, 0.4), RangeError);
}

TEST_CASE("W is nondecreasing along the extrapolated candidate") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const auto ex = extrapolated_candidate(admissible_candidate(traj, {0.95, 0.99, 0.999}, 0.0));
  const auto rows = entropy_report(ex, T);
  REQUIRE(rows.size() > 10);
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) CHECK(rows[k + 1].W >= rows[k].W - 1e-7);
  for (std::size_t k = 1; k + 1 < rows.size(); k += rows.size() / 5) {
    CHECK(rows[k].dWdt_formula >= 0.0);
    CHECK(rows[k].dWdt_fd == doctest::Approx(rows[k].dWdt_formula).epsilon(1e-2));
  }
}

TEST_CASE("single pole solves are far from admissible, the extrapolation is not") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const auto cand = admissible_candidate(traj, {0.95, 0.99, 0.999}, 0.0);
  const auto ex = extrapolated_candidate(cand);
  const auto scan = admissibility_scan(ex, ex.time(0), ex.times().back(), T, 10);
  CHECK(scan.curves.size() == 20);
  CHECK(scan.residuals.size() == scan.curves.size());
  CHECK(scan.min_residual > -1e-3);
  double lo = scan.residuals[0];
  for (double r : scan.residuals) lo = std::min(lo, r);
  CHECK(lo == scan.min_residual);
  CHECK_THROWS_AS(admissibility_scan(ex, 0.5, 0.4, T), RangeError);
}

TEST_CASE("uniqueness: rho_max nondecreasing in t and shrinking across t_i") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const std::vector<double> sched{0.9, 0.99, 0.999};
  const auto a = admissible_candidate(traj, sched, 0.0);
  const auto b = admissible_candidate(traj, sched, pi);
  const auto rep = uniqueness_experiment(a, b, 0.5 * T);
  REQUIRE(rep.series.size() == 3);
  for (const auto& s : rep.series) CHECK(s.max_decrease <= 1e-6);
  CHECK(rep.series[1].rho_at_probe < rep.series[0].rho_at_probe);
  CHECK(rep.series[2].rho_at_probe < rep.series[1].rho_at_probe);
  CHECK(rep.series[2].rho_at_probe >= 1.0);
}

TEST_CASE("f min-max chain is well defined on the candidate") {
  const auto traj = perturbed_run();
  const double T = traj.extinction_time();
  const auto ex = extrapolated_candidate(admissible_candidate(traj, {0.95, 0.99, 0.999}, 0.0));
  const auto c = f_min_max_chain(ex, 0.75 * T);
  CHECK(c.t1 == doctest::Approx(0.5 * T));
  CHECK(std::isfinite(c.c_required));
  CHECK_THROWS_AS(f_min_max_chain(ex, 0.3 * T), RangeError);
}
