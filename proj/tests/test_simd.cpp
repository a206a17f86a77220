#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "krf/flow.hpp"
#include "krf/simd/kernels.hpp"

using namespace krf;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    e = std::max(e, std::abs(a[j] - b[j]) / std::max(1.0, std::abs(a[j])));
  }
  return e;
}

}  // namespace

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  if (!simd::avx2_available()) {
    MESSAGE("AVX2 unavailable; scalar path only");
    return;
  }
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  std::mt19937_64 rng(7);
  for (std::size_t n : {4, 5, 7, 16, 33, 257}) {
    const auto lo = random_vec(rng, n, 0.1, 2.0), up = random_vec(rng, n, 0.1, 2.0);
    const auto iw = random_vec(rng, n, 1.0, 50.0), x = random_vec(rng, n, -1.0, 1.0);
    const auto y = random_vec(rng, n, -1.0, 1.0), k2 = random_vec(rng, n, -1.0, 1.0);
    const auto k3 = random_vec(rng, n, -1.0, 1.0), k4 = random_vec(rng, n, -1.0, 1.0);
    std::vector<double> a(n), b(n);

    s.flux_stencil(lo, up, iw, x, a);
    v.flux_stencil(lo, up, iw, x, b);
    CHECK(max_rel(a, b) < 1e-13);

    CHECK(s.weighted_sum(iw, x) == doctest::Approx(v.weighted_sum(iw, x)).epsilon(1e-12));
    CHECK(s.weighted_dot(iw, x, y) == doctest::Approx(v.weighted_dot(iw, x, y)).epsilon(1e-12));

    s.axpy(x, 0.37, y, a);
    v.axpy(x, 0.37, y, b);
    CHECK(max_rel(a, b) < 1e-15);

    s.rk4_combine(x, 0.1, y, k2, k3, k4, a);
    v.rk4_combine(x, 0.1, y, k2, k3, k4, b);
    CHECK(max_rel(a, b) < 1e-14);

    s.divide(x, iw, a);
    v.divide(x, iw, b);
    CHECK(max_rel(a, b) < 1e-15);
  }
}

TEST_CASE("flow is the same on both instruction sets") {
  if (!simd::avx2_available()) return;
  const auto m0 = cosine_profile(128, 0.2);
  simd::force_isa(simd::Isa::scalar);
  const auto a = evolve(m0, 0.9, 2e-3);
  simd::force_isa(simd::Isa::avx2);
  const auto b = evolve(m0, 0.9, 2e-3);
  REQUIRE(a.size() == b.size());
  double e = 0.0;
  for (std::size_t j = 0; j < 128; ++j) {
    e = std::max(e, std::abs(a.profile(a.size() - 1).w()[j] - b.profile(b.size() - 1).w()[j]));
  }
  CHECK(e < 1e-11);
  CHECK(simd::isa_name(simd::Isa::avx2) != simd::isa_name(simd::Isa::scalar));
}
