#pragma once

#include "krf/simd/kernels.hpp"

namespace krf::simd::detail {

void flux_stencil_scalar(std::span<const double> lo, std::span<const double> up,
                         std::span<const double> inv_w, std::span<const double> x,
                         std::span<double> out);
double weighted_sum_scalar(std::span<const double> w, std::span<const double> x);
double weighted_dot_scalar(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y);
void axpy_scalar(std::span<const double> x, double a, std::span<const double> k,
                 std::span<double> out);
void rk4_combine_scalar(std::span<const double> x, double c, std::span<const double> k1,
                        std::span<const double> k2, std::span<const double> k3,
                        std::span<const double> k4, std::span<double> out);
void divide_scalar(std::span<const double> x, std::span<const double> y, std::span<double> out);

#if defined(KRF_HAVE_AVX2)
void flux_stencil_avx2(std::span<const double> lo, std::span<const double> up,
                       std::span<const double> inv_w, std::span<const double> x,
                       std::span<double> out);
double weighted_sum_avx2(std::span<const double> w, std::span<const double> x);
double weighted_dot_avx2(std::span<const double> w, std::span<const double> x,
                         std::span<const double> y);
void axpy_avx2(std::span<const double> x, double a, std::span<const double> k,
               std::span<double> out);
void rk4_combine_avx2(std::span<const double> x, double c, std::span<const double> k1,
                      std::span<const double> k2, std::span<const double> k3,
                      std::span<const double> k4, std::span<double> out);
void divide_avx2(std::span<const double> x, std::span<const double> y, std::span<double> out);
#endif

}  // namespace krf::simd::detail
