#pragma once
// Data-parallel inner loops shared by the flow, conjugate heat and entropy
// evaluators. Every kernel has a scalar reference and, where the target
// supports it, an AVX2 variant selected once at startup.

#include <span>
#include <string_view>

namespace krf::simd {

enum class Isa { scalar, avx2 };

/// Conservative three-point stencil on a cell-centred grid:
///   out[j] = inv_w[j] * (up[j]*(x[j+1]-x[j]) - lo[j]*(x[j]-x[j-1]))
/// The boundary faces are closed (lo[0] and up[n-1] are ignored).
using FluxStencilFn = void (*)(std::span<const double> lo, std::span<const double> up,
                               std::span<const double> inv_w, std::span<const double> x,
                               std::span<double> out);
/// sum_j w[j] * x[j]
using WeightedSumFn = double (*)(std::span<const double> w, std::span<const double> x);
/// sum_j w[j] * x[j] * y[j]
using WeightedDotFn = double (*)(std::span<const double> w, std::span<const double> x,
                                 std::span<const double> y);
/// out[j] = x[j] + a * k[j]
using AxpyFn = void (*)(std::span<const double> x, double a, std::span<const double> k,
                        std::span<double> out);
/// out[j] = x[j] + c * (k1[j] + 2 k2[j] + 2 k3[j] + k4[j])
using Rk4CombineFn = void (*)(std::span<const double> x, double c, std::span<const double> k1,
                              std::span<const double> k2, std::span<const double> k3,
                              std::span<const double> k4, std::span<double> out);
/// out[j] = x[j] / y[j]
using DivideFn = void (*)(std::span<const double> x, std::span<const double> y,
                          std::span<double> out);

struct KernelTable {
  Isa isa;
  FluxStencilFn flux_stencil;
  WeightedSumFn weighted_sum;
  WeightedDotFn weighted_dot;
  AxpyFn axpy;
  Rk4CombineFn rk4_combine;
  DivideFn divide;
};

const KernelTable& scalar_kernels();
bool avx2_available();
// Throws std::runtime_error when the CPU (or the build) lacks AVX2.
const KernelTable& avx2_kernels();

/// Active table. Picks AVX2 when available unless KRF_SIMD=scalar is set.
const KernelTable& kernels();
/// Override the active table (tests, benchmarks).
void force_isa(Isa isa);
std::string_view isa_name(Isa isa);

}  // namespace krf::simd
