#pragma once

// Vector kernels for the quadrature inner loops. Every kernel has a scalar
// reference and an AVX2+FMA variant; the variant is picked once at runtime.
// Setting ELASTOBEAM_SIMD=scalar forces the reference path.

#include <complex>
#include <cstddef>

namespace elastobeam::simd {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa) noexcept;
bool cpu_has_avx2() noexcept;
Isa active_isa() noexcept;

/// Strided-free structure-of-arrays view of a batch of quadrature nodes.
struct PhaseBatch {
  const double* w = nullptr;     // weights
  const double* s_re = nullptr;  // phase, real part
  const double* s_im = nullptr;  // phase, imaginary part
  const double* f_re = nullptr;  // amplitude, real part
  const double* f_im = nullptr;  // amplitude, imaginary part
  std::size_t n = 0;
};

/// sum_j w_j * exp(i * rho * (s_re_j + i s_im_j)) * (f_re_j + i f_im_j)
std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho);
/// sum_j w_j * (f_re_j + i f_im_j)
std::complex<double> weighted_sum(const double* w, const double* f_re, const double* f_im,
                                  std::size_t n);

namespace scalar {
std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho);
std::complex<double> weighted_sum(const double* w, const double* f_re, const double* f_im,
                                  std::size_t n);
}  // namespace scalar

namespace avx2 {
std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho);
std::complex<double> weighted_sum(const double* w, const double* f_re, const double* f_im,
                                  std::size_t n);
}  // namespace avx2

}  // namespace elastobeam::simd
