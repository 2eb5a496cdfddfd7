#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "elastobeam/medium.hpp"

using namespace elastobeam;
using Eigen::Vector3d;

namespace {

MaterialModel medium_with(const char* lambda, const char* mu, const char* rho) {
  Box box;
  box.min = Vector3d::Constant(-1.5);
  box.max = Vector3d::Constant(1.5);
  box.margin = 0.25;
  return MaterialModel(box, FieldExpr::parse(lambda), FieldExpr::parse(mu), FieldExpr::parse(rho),
                       FieldExpr::constant(0), FieldExpr::constant(0), FieldExpr::constant(0));
}

}  // namespace

TEST_CASE("homogeneous wave speeds") {
  auto m = MaterialModel::homogeneous(2, 1, 1);
  auto p = m.wave_speed(WaveMode::P, Vector3d::Zero());
  CHECK(p.c == 2.0);
  CHECK(p.grad.isZero());
  CHECK(p.hess.isZero());
  CHECK(m.wave_speed(WaveMode::S, Vector3d(0.3, 0, 0)).c == 1.0);
}

TEST_CASE("chain rule for a linear lambda") {
  auto m = medium_with("2+0.1*x1", "1", "1");
  auto p = m.wave_speed(WaveMode::P, Vector3d::Zero());
  CHECK(p.c == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.grad[0] == doctest::Approx(0.025).epsilon(1e-14));
  const double h = 1e-5;
  const double fd = (m.speed(WaveMode::P, Vector3d(h, 0, 0)) - m.speed(WaveMode::P, Vector3d(-h, 0, 0))) / (2 * h);
  CHECK(std::abs(fd - p.grad[0]) < 1e-9);
}

TEST_CASE("speed hessian agrees with finite differences") {
  auto m = medium_with("2 + 0.3*sin(x1)*x2", "1 + 0.2*exp(-x3^2)", "1 + 0.1*cos(x1 + x2)");
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector3d x(u(rng), u(rng), u(rng));
    for (WaveMode mode : {WaveMode::P, WaveMode::S}) {
      auto s = m.wave_speed(mode, x);
      const double h = 1e-4;
      Eigen::Matrix3d fd;
      Vector3d g;
      for (int i = 0; i < 3; ++i) {
        Vector3d ei = Vector3d::Zero();
        ei[i] = h;
        g[i] = (m.speed(mode, x + ei) - m.speed(mode, x - ei)) / (2 * h);
        auto gi_p = m.wave_speed_grad(mode, x + ei).grad;
        auto gi_m = m.wave_speed_grad(mode, x - ei).grad;
        fd.col(i) = (gi_p - gi_m) / (2 * h);
      }
      CHECK((g - s.grad).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((fd - s.hess).cwiseAbs().maxCoeff() < 1e-7);
      CHECK(s.hess == s.hess.transpose());
    }
  }
}

TEST_CASE("conformal metric and speed-gap identity") {
  auto m = medium_with("2 + 0.3*sin(x1)*x2", "1 + 0.2*exp(-x3^2)", "1 + 0.1*cos(x1 + x2)");
  CHECK(MaterialModel::homogeneous(2, 1, 1).metric(WaveMode::P, Vector3d::Zero()).isApprox(
      Eigen::Matrix3d::Identity() / 4.0));
  CHECK(MaterialModel::homogeneous(2, 1, 1).metric(WaveMode::S, Vector3d::Zero()).isIdentity());
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector3d x(u(rng), u(rng), u(rng));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m.metric(WaveMode::P, x));
    const double c = m.speed(WaveMode::P, x);
    CHECK((es.eigenvalues().array() - 1.0 / (c * c)).abs().maxCoeff() < 1e-14);
    const double cs = m.speed(WaveMode::S, x);
    const double lhs = c * c - cs * cs;
    const double rhs = (m.lambda().eval(x) + m.mu().eval(x)) / m.rho().eval(x);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
  }
}

TEST_CASE("validation report") {
  auto ok = MaterialModel::homogeneous(2, 1, 1).validate(5);
  CHECK(ok.pass);
  CHECK(ok.min_speed_gap == doctest::Approx(1.0));
  CHECK(ok.min_mu == 1.0);
  CHECK(ok.min_bulk == 8.0);

  auto bad_mu = medium_with("2", "-1", "1").validate(4);
  CHECK_FALSE(bad_mu.pass);
  CHECK(bad_mu.reason == "μ ≤ 0");
  REQUIRE(bad_mu.first_violation.has_value());
  CHECK(*bad_mu.first_violation == Vector3d::Constant(-1.5));

  auto bad_bulk = medium_with("-0.5", "0.6", "1").validate(3);
  CHECK_FALSE(bad_bulk.pass);
  CHECK(bad_bulk.reason == "3λ+2μ ≤ 0");
  CHECK(bad_bulk.min_bulk == doctest::Approx(-0.3));

  CHECK_FALSE(medium_with("2", "1", "x1").validate(3).pass);
  CHECK_THROWS_AS(MaterialModel::homogeneous(2, 1, 1).validate(1), MediumError);
}

TEST_CASE("medium json round trip and rejection of unknown keys") {
  const char* text = R"({
    "box": {"min": [-1, -1, -1], "max": [1, 1, 1], "margin": 0.2},
    "fields": {"lambda": "2 + 0.1*x1", "mu": "1", "rho": "1", "A": "4", "B": "1", "C": 0}
  })";
  auto m = MaterialModel::from_json_text(text);
  CHECK(m.box().margin == 0.2);
  CHECK(m.box().contains_inner(Vector3d(0.79, 0, 0)));
  CHECK_FALSE(m.box().contains_inner(Vector3d(0.81, 0, 0)));
  CHECK(m.A().eval(Vector3d::Zero()) == 4.0);
  auto again = MaterialModel::from_json_text(m.to_json_text());
  CHECK(again.lambda().eval(Vector3d(0.5, 0, 0)) == m.lambda().eval(Vector3d(0.5, 0, 0)));

  CHECK_THROWS_AS(MaterialModel::from_json_text(R"({"box": {"min": [0,0,0], "max": [1,1,1]}, "fields": {}})"),
                  MediumError);
  CHECK_THROWS_AS(MaterialModel::from_json_text("{not json"), MediumError);
  std::string extra = std::string(text);
  extra.insert(extra.rfind('}'), R"(, "colour": "red")");
  CHECK_THROWS_AS(MaterialModel::from_json_text(extra), MediumError);
}
