#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "krf/error.hpp"
#include "krf/flow.hpp"

using namespace krf;
using std::numbers::pi;

TEST_CASE("round sphere shrinks by the closed form") {
  // w(t) = 1/2 ln(1 - t), T = 1, K (T - t) = 1.
  const auto traj = evolve(round_profile(64), 0.99, 1e-3);
  CHECK(traj.extinction_time() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.time(k);
    for (double w : traj.profile(k).w()) CHECK(w == doctest::Approx(0.5 * std::log1p(-t)).epsilon(1e-11));
    CHECK(traj.curvature(k).max() * (1 - t) == doctest::Approx(1.0).epsilon(1e-11));
  }
  CHECK(traj.last_time() == doctest::Approx(0.99).epsilon(1e-14));
  CHECK(type1_constant(traj) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("area decreases at exactly 4 pi on a perturbed sphere") {
  const auto m0 = cosine_profile(128, 0.2);
  const double T = extinction_time(m0);
  CHECK(T == doctest::Approx(volume(m0) / (4 * pi)));
  const auto traj = evolve(m0, 0.95, 2e-3);
  const double V0 = volume(traj.profile(0));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(std::abs(volume(traj.profile(k)) - V0 + 4 * pi * traj.time(k)) < 1e-11);
  }
}

TEST_CASE("perturbation decays: K(T - t) tends to 1") {
  const auto traj = evolve(cosine_profile(128, 0.2), 0.999, 2e-3);
  const double T = traj.extinction_time();
  const auto& K0 = traj.curvature(0);
  const auto& K1 = traj.curvature(traj.size() - 1);
  const double spread0 = (K0.max() - K0.min()) * T;
  const double spread1 = (K1.max() - K1.min()) * (T - traj.last_time());
  CHECK(spread1 < 0.05 * spread0);
  const auto nv = normalized_view(traj);
  CHECK(nv.s.back() == doctest::Approx(normalized_time(traj.last_time(), T)));
}

TEST_CASE("checkpoints are stored exactly and interpolation is exact on round") {
  FlowOptions opt;
  opt.checkpoints = {0.5, 0.75};
  const auto traj = evolve(round_profile(32), 0.9, 7e-3, opt);
  bool found = false;
  for (double t : traj.times()) found = found || t == 0.75;
  CHECK(found);
  const auto m = traj.profile_at(0.4321);
  for (double w : m.w()) CHECK(w == doctest::Approx(0.5 * std::log1p(-0.4321)).epsilon(1e-12));
  for (double K : traj.curvature_at(0.4321)) CHECK(K == doctest::Approx(1 / (1 - 0.4321)).epsilon(1e-12));
  CHECK_THROWS_AS(traj.profile_at(0.95), RangeError);
  CHECK(traj.time(traj.bracket(0.5)) <= 0.5);
}

TEST_CASE("snapshot round trip is bit exact and hashed") {
  const auto traj = evolve(cosine_profile(32, 0.1), 0.5, 1e-2);
  const auto back = FlowTrajectory::from_json(traj.to_json());
  REQUIRE(back.size() == traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(back.time(k) == traj.time(k));
    for (std::size_t j = 0; j < 32; ++j) CHECK(back.profile(k).w()[j] == traj.profile(k).w()[j]);
  }
  CHECK(back.content_hash() == traj.content_hash());
  const auto other = evolve(cosine_profile(32, 0.1001), 0.5, 1e-2);
  CHECK(other.content_hash() != traj.content_hash());
}

TEST_CASE("blow-up of the round flow is stationary") {
  const auto traj = evolve(round_profile(32), 0.99, 1e-3);
  const auto b = blowup_sequence(traj, 0.9, -1.0, 0.5);
  CHECK(b.extinction_time() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double s = b.time(k);
    CHECK(volume(b.profile(k)) == doctest::Approx(4 * pi * (1 - s)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(blowup_sequence(traj, 0.9, 0.1, 0.5), RangeError);
}

TEST_CASE("metric comparison holds along the flow") {
  const auto traj = evolve(cosine_profile(64, 0.2), 0.9, 2e-3);
  const double T = traj.extinction_time();
  const auto mc = metric_comparison_check(traj, 0.2 * T, 0.8 * T);
  CHECK(mc.applicable);
  CHECK(mc.ratio <= 1.0 + 1e-9);
  CHECK_THROWS_AS(metric_comparison_check(traj, 0.5 * T, 0.2 * T), RangeError);
  const auto fb = flow_bounds(traj);
  CHECK(fb.times.size() == traj.size());
}

TEST_CASE("bad integrator settings are rejected") {
  CHECK_THROWS_AS(evolve(round_profile(16), 1.2, 1e-3), RangeError);
  CHECK_THROWS_AS(evolve(round_profile(16), 0.5, -1.0), IntegratorError);
}
