// Seeded property checks over random axisymmetric profiles.
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "krf/config.hpp"
#include "krf/conjheat.hpp"
#include "krf/flow.hpp"
#include "krf/lgeo.hpp"
#include "krf/perelman.hpp"

using namespace krf;
using std::numbers::pi;

namespace {

// w = sum_k a_k cos^k theta with |a_k| <= 0.15 / k.
MetricProfile random_profile(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(4);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = 0.15 * u(rng) / (k + 1);
  const auto g = Grid::make(n);
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = std::cos(g->theta(j));
    double p = 1.0;
    for (double ak : a) {
      p *= c;
      w[j] += ak * p;
    }
  }
  return MetricProfile(g, w);
}

}  // namespace

TEST_CASE("random profiles: Gauss-Bonnet, area law, T = Vol / 4 pi") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 6; ++trial) {
    const auto m0 = random_profile(rng, 96);
    CHECK(integrate(m0, gauss_curvature(m0).values()) == doctest::Approx(4 * pi).epsilon(1e-12));
    const auto traj = evolve(m0, 0.8, 4e-3);
    CHECK(traj.extinction_time() == doctest::Approx(volume(m0) / (4 * pi)).epsilon(1e-15));
    const double V0 = volume(m0);
    for (std::size_t k = 0; k < traj.size(); k += 5) {
      CHECK(std::abs(volume(traj.profile(k)) - V0 + 4 * pi * traj.time(k)) < 1e-11);
      CHECK(integrate(traj.profile(k), traj.curvature(k).values()) == doctest::Approx(4 * pi).epsilon(1e-11));
    }
  }
}

TEST_CASE("random profiles: conjugate mass, positivity and W monotone") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 4; ++trial) {
    const auto m0 = random_profile(rng, 96);
    FlowOptions opt;
    opt.checkpoints = {0.9};
    const auto traj = evolve(m0, 0.9, 4e-3, opt);
    const double T = traj.extinction_time();
    const double pole = trial % 2 ? pi : 0.0;
    const auto sol = solve_backward(traj, 0.9 * T, delta_terminal(traj.profile_at(0.9 * T), pole, 0.01 * T));
    double prev = -1e300;
    for (std::size_t k = 0; k < sol.size(); ++k) {
      CHECK(std::abs(sol.mass(k) - 1.0) < 1e-12);
      CHECK(sol.u_field(k).min() > 0.0);
      // W is nondecreasing for every positive solution once tau = t_ref - t.
      const double W = entropy_W(sol, k, 0.9 * T + 0.01 * T);
      CHECK(W >= prev - 1e-7);
      prev = W;
    }
  }
}

TEST_CASE("random profiles: minimiser beats the lattice and both endpoints fixed") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const auto m0 = random_profile(rng, 96);
    const auto traj = evolve(m0, 0.95, 4e-3);
    const double T = traj.extinction_time();
    const BasePoint base{pi * u(rng), 0.9 * T};
    const double q = pi * u(rng), t = 0.5 * T * u(rng);
    const auto r = minimize_L(traj, base, q, t);
    CHECK(r.L_value <= r.lattice_value + 1e-12);
    CHECK(r.theta.front() == base.theta);
    CHECK(fold_colatitude(r.theta.back()) == doctest::Approx(q).epsilon(1e-12));
    std::vector<double> line(r.theta.size());
    for (std::size_t k = 0; k < line.size(); ++k) {
      line[k] = base.theta + (q - base.theta) * k / (line.size() - 1.0);
    }
    CHECK(r.L_value <= L_functional(traj, line, base, t) + 1e-12);
  }
}

TEST_CASE("random configs: canonical dump parses back to the same hash") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ExperimentConfig c;
    c.n_nodes = 64 + static_cast<std::size_t>(400 * u(rng));
    c.amplitude = u(rng);
    c.step = 1e-4 + 1e-2 * u(rng);
    c.eps_factor = 0.01 + u(rng);
    c.tol.v = u(rng) * 1e-2;
    c.seed = rng();
    const auto back = parse_config(c.canonical());
    CHECK(back.hash() == c.hash());
    CHECK(back.amplitude == c.amplitude);
    CHECK(back.seed == c.seed);
  }
}
