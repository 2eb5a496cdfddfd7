#include "elastobeam/simd.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace elastobeam::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) for x <= 709; results below the normal range flush to zero.
inline __m256d exp4(__m256d x) {
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d inv_ln2 = _mm256_set1_pd(1.44269504088896338700e+00);
  const __m256d lo_limit = _mm256_set1_pd(-708.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lo_limit);
  x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, inv_ln2), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);
  // Taylor series to degree 13 on |r| <= ln2 / 2.
  static constexpr double inv_fact[] = {
      1.0,
      1.0,
      1.0 / 2.0,
      1.0 / 6.0,
      1.0 / 24.0,
      1.0 / 120.0,
      1.0 / 720.0,
      1.0 / 5040.0,
      1.0 / 40320.0,
      1.0 / 362880.0,
      1.0 / 3628800.0,
      1.0 / 39916800.0,
      1.0 / 479001600.0,
      1.0 / 6227020800.0,
  };
  __m256d p = _mm256_set1_pd(inv_fact[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact[k]));
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(ni);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d scale = _mm256_castsi256_pd(bits);
  return _mm256_andnot_pd(underflow, _mm256_mul_pd(p, scale));
}

// sin and cos of x with |x| < 2^19 * pi/2.
inline void sincos4(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d two_over_pi = _mm256_set1_pd(6.36619772367581382433e-01);
  const __m256d pio2_1 = _mm256_set1_pd(1.57079632673412561417e+00);
  const __m256d pio2_1t = _mm256_set1_pd(6.07710050650619224932e-11);
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, two_over_pi), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, pio2_1, x);
  r = _mm256_fnmadd_pd(k, pio2_1t, r);
  const __m256d r2 = _mm256_mul_pd(r, r);
  // sin: odd terms through r^17, cos: even terms through r^16.
  static constexpr double s_coef[] = {
      1.0,
      -1.0 / 6.0,
      1.0 / 120.0,
      -1.0 / 5040.0,
      1.0 / 362880.0,
      -1.0 / 39916800.0,
      1.0 / 6227020800.0,
      -1.0 / 1307674368000.0,
      1.0 / 355687428096000.0,
  };
  static constexpr double c_coef[] = {
      1.0,
      -1.0 / 2.0,
      1.0 / 24.0,
      -1.0 / 720.0,
      1.0 / 40320.0,
      -1.0 / 3628800.0,
      1.0 / 479001600.0,
      -1.0 / 87178291200.0,
      1.0 / 20922789888000.0,
  };
  __m256d ps = _mm256_set1_pd(s_coef[8]);
  __m256d pc = _mm256_set1_pd(c_coef[8]);
  for (int i = 7; i >= 0; --i) {
    ps = _mm256_fmadd_pd(ps, r2, _mm256_set1_pd(s_coef[i]));
    pc = _mm256_fmadd_pd(pc, r2, _mm256_set1_pd(c_coef[i]));
  }
  ps = _mm256_mul_pd(ps, r);
  // Quadrant q = k mod 4: (sin, cos) = (s, c), (c, -s), (-s, -c), (-c, s).
  const __m256i q = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(k));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
  const __m256d sin_neg = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, two), two));
  const __m256i q1 = _mm256_add_epi64(q, one);
  const __m256d cos_neg = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q1, two), two));
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d s = _mm256_blendv_pd(ps, pc, swap);
  const __m256d c = _mm256_blendv_pd(pc, ps, swap);
  s_out = _mm256_xor_pd(s, _mm256_and_pd(sin_neg, sign));
  c_out = _mm256_xor_pd(c, _mm256_and_pd(cos_neg, sign));
}

}  // namespace

std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho) {
  const __m256d vr = _mm256_set1_pd(rho);
  const __m256d neg_r = _mm256_set1_pd(-rho);
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= b.n; j += 4) {
    const __m256d mag = _mm256_mul_pd(_mm256_loadu_pd(b.w + j), exp4(_mm256_mul_pd(neg_r, _mm256_loadu_pd(b.s_im + j))));
    __m256d s, c;
    sincos4(_mm256_mul_pd(vr, _mm256_loadu_pd(b.s_re + j)), s, c);
    const __m256d fr = _mm256_loadu_pd(b.f_re + j);
    const __m256d fi = _mm256_loadu_pd(b.f_im + j);
    const __m256d tr = _mm256_fmsub_pd(c, fr, _mm256_mul_pd(s, fi));
    const __m256d ti = _mm256_fmadd_pd(c, fi, _mm256_mul_pd(s, fr));
    acc_re = _mm256_fmadd_pd(mag, tr, acc_re);
    acc_im = _mm256_fmadd_pd(mag, ti, acc_im);
  }
  double re = hsum(acc_re), im = hsum(acc_im);
  for (; j < b.n; ++j) {
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
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vw = _mm256_loadu_pd(w + j);
    acc_re = _mm256_fmadd_pd(vw, _mm256_loadu_pd(f_re + j), acc_re);
    acc_im = _mm256_fmadd_pd(vw, _mm256_loadu_pd(f_im + j), acc_im);
  }
  double re = hsum(acc_re), im = hsum(acc_im);
  for (; j < n; ++j) {
    re += w[j] * f_re[j];
    im += w[j] * f_im[j];
  }
  return {re, im};
}

}  // namespace elastobeam::simd::avx2

#else

namespace elastobeam::simd::avx2 {

std::complex<double> oscillatory_sum(const PhaseBatch& b, double rho) { return scalar::oscillatory_sum(b, rho); }

std::complex<double> weighted_sum(const double* w, const double* f_re, const double* f_im,
                                  std::size_t n) {
  return scalar::weighted_sum(w, f_re, f_im, n);
}

}  // namespace elastobeam::simd::avx2

#endif
