#include <cmath>

#include "elastobeam/simd.hpp"

namespace elastobeam::simd::scalar {

std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < b.n; ++j) {
    const double mag = b.w[j] * std::exp(-rho * b.s_im[j]);
    const double c = std::cos(rho * b.s_re[j]);
    const double s = std::sin(rho * b.s_re[j]);
    re += mag * (c * b.f_re[j] - s * b.f_im[j]);
    im += mag * (c * b.f_im[j] + s * b.f_re[j]);
  }
  return {re, im};
}

std::complex<double> weighted_sum(const double* w, const double* f_re, const double* f_im,
                                  std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    re += w[j] * f_re[j];
    im += w[j] * f_im[j];
  }
  return {re, im};
}

}  // namespace elastobeam::simd::scalar
