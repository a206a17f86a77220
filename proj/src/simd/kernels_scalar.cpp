#include "kernels_impl.hpp"

#include <cstddef>

namespace krf::simd::detail {

void flux_stencil_scalar(std::span<const double> lo, std::span<const double> up,
                         std::span<const double> inv_w, std::span<const double> x,
                         std::span<double> out) {
  const std::size_t n = x.size();
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  out[0] = inv_w[0] * (up[0] * (x[1] - x[0]));
  for (std::size_t j = 1; j + 1 < n; ++j) {
    out[j] = inv_w[j] * (up[j] * (x[j + 1] - x[j]) - lo[j] * (x[j] - x[j - 1]));
  }
  out[n - 1] = inv_w[n - 1] * (0.0 - lo[n - 1] * (x[n - 1] - x[n - 2]));
}

double weighted_sum_scalar(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
  return s;
}

double weighted_dot_scalar(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j] * y[j];
  return s;
}

void axpy_scalar(std::span<const double> x, double a, std::span<const double> k,
                 std::span<double> out) {
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] + a * k[j];
}

void rk4_combine_scalar(std::span<const double> x, double c, std::span<const double> k1,
                        std::span<const double> k2, std::span<const double> k3,
                        std::span<const double> k4, std::span<double> out) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = x[j] + c * (((k1[j] + 2.0 * k2[j]) + 2.0 * k3[j]) + k4[j]);
  }
}

void divide_scalar(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] / y[j];
}

}  // namespace krf::simd::detail
