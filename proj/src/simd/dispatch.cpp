#include <cstdlib>
#include <string_view>

#include "elastobeam/simd.hpp"

namespace elastobeam::simd {

const char* to_string(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() noexcept {
  static const Isa isa = [] {
    const char* env = std::getenv("ELASTOBEAM_SIMD");
    if (env && std::string_view(env) == "scalar") return Isa::Scalar;
    return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
  }();
  return isa;
}

std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho) {
  return active_isa() == Isa::Avx2 ? avx2::oscillatory_sum(b, rho) : scalar::oscillatory_sum(b, rho);
}

std::complex<double> weighted_sum(const double* w, const double* f_re, const double* f_im,
                                  std::size_t n) {
  return active_isa() == Isa::Avx2 ? avx2::weighted_sum(w, f_re, f_im, n)
                                   : scalar::weighted_sum(w, f_re, f_im, n);
}

}  // namespace elastobeam::simd
