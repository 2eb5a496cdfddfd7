#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "elastobeam/interaction.hpp"
#include "media.hpp"

using namespace elastobeam;
using Eigen::Vector3d;

namespace {

MaterialModel benchmark_medium() { return testmedia::make("2", "1", "1", 1.5, 0.25, "4", "1", "0"); }

Vector3d random_unit(std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Vector3d v(nd(rng), nd(rng), nd(rng));
  return v.normalized();
}

Matrix3cd random_matrix(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix3cd a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = cplx(u(rng), u(rng));
  return a;
}

}  // namespace

TEST_CASE("covector triples reproduce the hand weights") {
  const MaterialModel m = testmedia::make("2", "1", "1");
  const CovectorTriple a = select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(0, 1, 0));
  CHECK(a.b == -0.75);
  CHECK((a.xi[0] - Vector3d(0.8, -0.6, 0.0)).norm() < 1e-15);
  const CovectorTriple h =
      select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(0.5, std::sqrt(3.0) / 2.0, 0));
  CHECK(h.b == -1.0);
  CHECK((h.xi[0] - (h.xi[1] - h.xi[2])).norm() < 1e-15);
  CHECK(a.alpha.isApprox(Vector3d(0, 0, 1)));
}

TEST_CASE("covector residuals on random configurations") {
  std::mt19937 rng(7);
  const MaterialModel m = testmedia::smooth();
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  int built = 0;
  while (built < 100) {
    const Vector3d x(u(rng), u(rng), u(rng));
    const Vector3d a = random_unit(rng), b = random_unit(rng);
    if (a.cross(b).norm() < 0.05) continue;
    const CovectorTriple tr = select_covectors(m, x, a, b);
    CHECK(tr.cone_residual() <= 1e-12);
    CHECK(tr.dependence_residual() <= 1e-12);
    CHECK(std::abs(tr.xi[0].norm() - 1.0) < 1e-12);
    ++built;
  }
}

TEST_CASE("covector selection errors") {
  const MaterialModel m = testmedia::make("2", "1", "1");
  CHECK_THROWS_AS(select_covectors(m, Vector3d(5, 0, 0), Vector3d(1, 0, 0), Vector3d(0, 1, 0)), InteractionError);
  CHECK_THROWS_AS(select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(1, 0, 0)), InteractionError);
  CHECK_THROWS_AS(select_covectors(m, Vector3d::Zero(), Vector3d(2, 0, 0), Vector3d(0, 1, 0)), InteractionError);
}

TEST_CASE("integrand matches the index-loop evaluator") {
  const Moduli id{2.0, 1.0, 0.0, 0.0, 0.0};
  const Matrix3cd I = Matrix3cd::Identity();
  CHECK(std::abs(interaction_integrand(id, I, I, I) - interaction_integrand_loops(id, I, I, I)) < 1e-14);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int n = 0; n < 100; ++n) {
    const Moduli k{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const Matrix3cd a = random_matrix(rng), b = random_matrix(rng), v = random_matrix(rng);
    const cplx g = interaction_integrand(k, a, b, v);
    CHECK(std::abs(g - interaction_integrand_loops(k, a, b, v)) <= 1e-12 * (1.0 + std::abs(g)));
    CHECK(std::abs(g - interaction_integrand(k, b, a, v)) <= 1e-12 * (1.0 + std::abs(g)));
    CHECK(interaction_integrand(k, Matrix3cd::Zero(), b, v) == cplx(0.0));
    CHECK(interaction_integrand(k, a, b, Matrix3cd::Zero()) == cplx(0.0));
  }
}

TEST_CASE("leading symbol reduces to the two-term form") {
  const MaterialModel m = testmedia::make("2", "1", "1", 1.5, 0.25, "4", "1", "0");
  const Moduli k = moduli_at(m, Vector3d::Zero());
  const CovectorTriple a = select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(0, 1, 0));
  CHECK(std::abs(leading_symbol(k, a) - cplx(-1.8)) < 1e-14);
  const CovectorTriple h =
      select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(0.5, std::sqrt(3.0) / 2.0, 0));
  CHECK(std::abs(leading_symbol(k, h) - cplx(-0.5)) < 1e-14);
  CHECK(std::abs(leading_symbol(k, a, -a.alpha) - leading_symbol(k, a)) < 1e-14);
  Moduli kc = k;
  kc.C = 17.0;
  CHECK(std::abs(leading_symbol(kc, a) - leading_symbol(k, a)) < 1e-14);
  CHECK_THROWS_AS(leading_symbol(k, a, Vector3d(1, 0, 0)), InteractionError);

  std::mt19937 rng(3);
  const MaterialModel s = testmedia::smooth();
  std::uniform_real_distribution<double> u(0.5, 3.0), x(-0.8, 0.8);
  int done = 0;
  while (done < 100) {
    const Vector3d p(x(rng), x(rng), x(rng));
    const Vector3d xi1 = random_unit(rng), xi2 = random_unit(rng);
    if (xi1.cross(xi2).norm() < 0.05) continue;
    const CovectorTriple tr = select_covectors(s, p, xi1, xi2);
    const Moduli km{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const double ref = two_term_symbol(km, tr);
    CHECK(std::abs(leading_symbol(km, tr) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    ++done;
  }
}

TEST_CASE("quadrature model integral matches the closed form") {
  Eigen::Matrix4cd Q;
  Q << cplx(0.3, 1.2), cplx(0.1, 0.2), 0.0, cplx(0.0, 0.1),
       cplx(0.1, 0.2), cplx(-0.4, 1.0), cplx(0.2, 0.0), 0.0,
       0.0, cplx(0.2, 0.0), cplx(0.5, 0.8), cplx(0.0, 0.1),
       cplx(0.0, 0.1), 0.0, cplx(0.0, 0.1), cplx(0.1, 1.5);
  const cplx exact = 4.0 * std::numbers::pi * std::numbers::pi * inverse_sqrt_det_minus_i(Q);
  const QuadratureResult r = gaussian_model_integral(Q, 64.0);
  CHECK(std::abs(r.value - exact) / std::abs(exact) < 1e-3);
  const QuadratureResult r16 = gaussian_model_integral(Q, 16.0);
  CHECK(std::abs(r16.value - r.value) / std::abs(exact) < 1e-3);
}

TEST_CASE("inverse square root determinant of a diagonal form") {
  Eigen::Matrix4cd Q = Eigen::Matrix4cd::Zero();
  Q.diagonal() << cplx(0, 1), cplx(0, 4), cplx(1, 1), cplx(-1, 1);
  // -iQ = diag(1, 4, 1 - i, 1 + i)
  const cplx expect = 1.0 / (2.0 * std::sqrt(cplx(1, -1)) * std::sqrt(cplx(1, 1)));
  CHECK(std::abs(inverse_sqrt_det_minus_i(Q) - expect) < 1e-14);
}

TEST_CASE("triple beams at the interaction point") {
  const MaterialModel m = benchmark_medium();
  const CovectorTriple tr = select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(0, 1, 0));
  const TripleBeams tb = build_triple_beams(m, tr);
  const StationaryPhase sp = stationary_phase_prediction(tb);
  CHECK(std::abs(sp.F_p - sp.W_p * sp.symbol) <= 1e-10 * std::abs(sp.F_p));
  CHECK(std::abs(sp.symbol - cplx(-1.8)) < 1e-12);
  CHECK((sp.Q - sp.Q.transpose()).norm() < 1e-12);
  const SumPhaseDiagnostics d = sum_phase_diagnostics(tb, 1000, 0.1, 0);
  CHECK(d.S_p < 1e-12);
  CHECK(d.grad_S_p < 1e-6);
  CHECK(d.min_ratio > 0.0);
  CHECK(d.samples > 900);
  CHECK(tb.overlap_radius > 0.0);
  CHECK(tb.overlap_radius < 0.8);
}

TEST_CASE("homogeneous benchmark at high frequency") {
  const MaterialModel m = benchmark_medium();
  const CovectorTriple tr = select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), Vector3d(0, 1, 0));
  QuadratureOptions q;
  q.nodes = 16;
  const InteractionMeasurement r = measure_interaction(m, tr, {64.0, 256.0, 512.0}, {}, q, 0);
  CHECK(r.rel_error[0] <= 0.05);
  CHECK(r.rel_error[2] < r.rel_error[1]);
  CHECK(std::abs(r.symbol_estimate - cplx(-1.8)) < 0.02 * 1.8);
  CHECK(r.diag.min_ratio > 0.0);
  CHECK(r.to_json().contains("measurements"));
}

TEST_CASE("quadrature rejects a non-definite phase Hessian") {
  Eigen::Matrix4cd Q = Eigen::Matrix4cd::Identity();
  CHECK_THROWS_AS(gaussian_model_integral(Q, 16.0), InteractionError);
}
