#include "kernels_impl.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace krf::simd {

namespace {

constexpr KernelTable kScalar{Isa::scalar,
                              detail::flux_stencil_scalar,
                              detail::weighted_sum_scalar,
                              detail::weighted_dot_scalar,
                              detail::axpy_scalar,
                              detail::rk4_combine_scalar,
                              detail::divide_scalar};

#if defined(KRF_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2,
                            detail::flux_stencil_avx2,
                            detail::weighted_sum_avx2,
                            detail::weighted_dot_avx2,
                            detail::axpy_avx2,
                            detail::rk4_combine_avx2,
                            detail::divide_avx2};
#endif

const KernelTable* select_default() {
  if (const char* env = std::getenv("KRF_SIMD"); env && std::string(env) == "scalar") {
    return &kScalar;
  }
#if defined(KRF_HAVE_AVX2)
  if (avx2_available()) return &kAvx2;
#endif
  return &kScalar;
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{select_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

bool avx2_available() {
#if defined(KRF_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& avx2_kernels() {
#if defined(KRF_HAVE_AVX2)
  if (avx2_available()) return kAvx2;
#endif
  throw std::runtime_error("AVX2 kernels unavailable on this target");
}

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  active().store(isa == Isa::avx2 ? &avx2_kernels() : &kScalar, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace krf::simd
