#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "elastobeam/simd.hpp"

using namespace elastobeam::simd;

namespace {

struct Batch {
  std::vector<double> w, sr, si, fr, fi;
  PhaseBatch view() const { return {w.data(), sr.data(), si.data(), fr.data(), fi.data(), w.size()}; }
};

Batch random_batch(std::mt19937& rng, std::size_t n, double phase_span, double damp_span) {
  std::uniform_real_distribution<double> u(-1, 1);
  Batch b;
  for (std::size_t j = 0; j < n; ++j) {
    b.w.push_back(std::abs(u(rng)));
    b.sr.push_back(phase_span * u(rng));
    b.si.push_back(damp_span * std::abs(u(rng)));
    b.fr.push_back(u(rng));
    b.fi.push_back(u(rng));
  }
  return b;
}

double magnitude_bound(const Batch& b, double rho) {
  double s = 0;
  for (std::size_t j = 0; j < b.w.size(); ++j) s += b.w[j] * std::exp(-rho * b.si[j]) * std::hypot(b.fr[j], b.fi[j]);
  return s;
}

}  // namespace

TEST_CASE("avx2 oscillatory sum matches the scalar reference") {
  if (!cpu_has_avx2()) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  std::mt19937 rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 256u, 1001u}) {
    for (double rho : {1.0, 16.0, 64.0, 512.0}) {
      auto b = random_batch(rng, n, 20.0, 3.0);
      const auto ref = scalar::oscillatory_sum(b.view(), rho);
      const auto vec = avx2::oscillatory_sum(b.view(), rho);
      CHECK(std::abs(ref - vec) <= 1e-13 * (1.0 + magnitude_bound(b, rho)));
    }
  }
}

TEST_CASE("avx2 kernel handles extreme damping and large phases") {
  if (!cpu_has_avx2()) return;
  Batch b;
  for (double si : {0.0, 1e-3, 5.0, 20.0, 800.0, 1e6}) {
    for (double sr : {-4000.0, -1.0, 0.0, 0.7853981633974483, 3.0, 1234.5}) {
      b.w.push_back(1.0);
      b.sr.push_back(sr);
      b.si.push_back(si);
      b.fr.push_back(1.0);
      b.fi.push_back(0.0);
    }
  }
  for (std::size_t j = 0; j < b.w.size(); ++j) {
    PhaseBatch one{&b.w[j], &b.sr[j], &b.si[j], &b.fr[j], &b.fi[j], 1};
    // Pad to a full lane so the vector path is exercised.
    double w4[4] = {b.w[j], 0, 0, 0}, sr4[4] = {b.sr[j], 0, 0, 0}, si4[4] = {b.si[j], 0, 0, 0};
    double fr4[4] = {1, 0, 0, 0}, fi4[4] = {0, 0, 0, 0};
    PhaseBatch four{w4, sr4, si4, fr4, fi4, 4};
    const auto ref = scalar::oscillatory_sum(one, 1.0);
    const auto vec = avx2::oscillatory_sum(four, 1.0);
    CHECK(std::abs(ref - vec) <= 1e-13);
  }
}

TEST_CASE("weighted sums agree across kernels") {
  std::mt19937 rng(8);
  for (std::size_t n : {0u, 2u, 7u, 64u, 999u}) {
    auto b = random_batch(rng, n, 1.0, 1.0);
    const auto ref = scalar::weighted_sum(b.w.data(), b.fr.data(), b.fi.data(), n);
    const auto vec = avx2::weighted_sum(b.w.data(), b.fr.data(), b.fi.data(), n);
    const auto any = weighted_sum(b.w.data(), b.fr.data(), b.fi.data(), n);
    CHECK(std::abs(ref - vec) <= 1e-13 * (1.0 + double(n)));
    CHECK(std::abs(ref - any) <= 1e-13 * (1.0 + double(n)));
  }
}

TEST_CASE("dispatch reports a consistent isa") {
  const Isa isa = active_isa();
  CHECK((isa == Isa::Scalar || cpu_has_avx2()));
  CHECK(std::string(to_string(isa)).size() > 0);
}
