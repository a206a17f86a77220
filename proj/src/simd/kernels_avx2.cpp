// Compiled with -mavx2 only; no FMA so element-wise kernels stay bit-identical
// to the scalar reference. Reductions differ from the scalar order in the last
// bits and are tested against it with a tolerance.

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cstddef>

namespace krf::simd::detail {

void flux_stencil_avx2(std::span<const double> lo, std::span<const double> up,
                       std::span<const double> inv_w, std::span<const double> x,
                       std::span<double> out) {
  const std::size_t n = x.size();
  if (n < 6) {
    flux_stencil_scalar(lo, up, inv_w, x, out);
    return;
  }
  out[0] = inv_w[0] * (up[0] * (x[1] - x[0]));
  std::size_t j = 1;
  for (; j + 4 < n; j += 4) {
    const __m256d xm = _mm256_loadu_pd(&x[j - 1]);
    const __m256d xc = _mm256_loadu_pd(&x[j]);
    const __m256d xp = _mm256_loadu_pd(&x[j + 1]);
    const __m256d fu = _mm256_mul_pd(_mm256_loadu_pd(&up[j]), _mm256_sub_pd(xp, xc));
    const __m256d fl = _mm256_mul_pd(_mm256_loadu_pd(&lo[j]), _mm256_sub_pd(xc, xm));
    _mm256_storeu_pd(&out[j], _mm256_mul_pd(_mm256_loadu_pd(&inv_w[j]), _mm256_sub_pd(fu, fl)));
  }
  for (; j + 1 < n; ++j) {
    out[j] = inv_w[j] * (up[j] * (x[j + 1] - x[j]) - lo[j] * (x[j] - x[j - 1]));
  }
  out[n - 1] = inv_w[n - 1] * (0.0 - lo[n - 1] * (x[n - 1] - x[n - 2]));
}

namespace {

double hsum(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

double weighted_sum_avx2(std::span<const double> w, std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&w[j]), _mm256_loadu_pd(&x[j])));
  }
  double s = hsum(acc);
  for (; j < n; ++j) s += w[j] * x[j];
  return s;
}

double weighted_dot_avx2(std::span<const double> w, std::span<const double> x,
                         std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(&w[j]), _mm256_loadu_pd(&x[j]));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(wx, _mm256_loadu_pd(&y[j])));
  }
  double s = hsum(acc);
  for (; j < n; ++j) s += w[j] * x[j] * y[j];
  return s;
}

void axpy_avx2(std::span<const double> x, double a, std::span<const double> k,
               std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d r =
        _mm256_add_pd(_mm256_loadu_pd(&x[j]), _mm256_mul_pd(va, _mm256_loadu_pd(&k[j])));
    _mm256_storeu_pd(&out[j], r);
  }
  for (; j < n; ++j) out[j] = x[j] + a * k[j];
}

void rk4_combine_avx2(std::span<const double> x, double c, std::span<const double> k1,
                      std::span<const double> k2, std::span<const double> k3,
                      std::span<const double> k4, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d s = _mm256_add_pd(_mm256_loadu_pd(&k1[j]), _mm256_mul_pd(two, _mm256_loadu_pd(&k2[j])));
    s = _mm256_add_pd(s, _mm256_mul_pd(two, _mm256_loadu_pd(&k3[j])));
    s = _mm256_add_pd(s, _mm256_loadu_pd(&k4[j]));
    _mm256_storeu_pd(&out[j], _mm256_add_pd(_mm256_loadu_pd(&x[j]), _mm256_mul_pd(vc, s)));
  }
  for (; j < n; ++j) out[j] = x[j] + c * (((k1[j] + 2.0 * k2[j]) + 2.0 * k3[j]) + k4[j]);
}

void divide_avx2(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  const std::size_t n = x.size();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(&out[j], _mm256_div_pd(_mm256_loadu_pd(&x[j]), _mm256_loadu_pd(&y[j])));
  }
  for (; j < n; ++j) out[j] = x[j] / y[j];
}

}  // namespace krf::simd::detail
