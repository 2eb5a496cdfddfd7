#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "doctest.h"
#include "elastobeam/geometry.hpp"
#include "media.hpp"

using namespace elastobeam;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

double max_abs(const Christoffel& a, const Christoffel& b) {
  double m = 0.0;
  for (int k = 0; k < 3; ++k) m = std::max(m, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return m;
}

std::shared_ptr<const Geodesic> trace_shared(const MaterialModel& m, WaveMode mode, Vector3d x0, Vector3d v0,
                                             TraceOptions opt = {}) {
  return std::make_shared<const Geodesic>(trace_geodesic(m, mode, x0, v0, opt));
}

}  // namespace

TEST_CASE("homogeneous geodesics are straight lines with speed c") {
  auto m = MaterialModel::homogeneous(2, 1, 1, 0, 0, 0, 1.5, 0.25);
  auto s = trace_geodesic(m, WaveMode::S, Vector3d::Zero(), Vector3d(1, 0, 0));
  auto p = trace_geodesic(m, WaveMode::P, Vector3d::Zero(), Vector3d(3, 0, 0));
  for (double t : {-0.6, -0.1, 0.0, 0.37, 0.61}) {
    CHECK((s.at(t).x - Vector3d(t, 0, 0)).norm() < 1e-12);
    CHECK((p.at(t / 2).x - Vector3d(t, 0, 0)).norm() < 1e-12);
  }
  CHECK(s.t_plus() == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(s.t_minus() == doctest::Approx(-1.25).epsilon(1e-12));
  CHECK(p.t_plus() == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(frame_drift(s) < 1e-14);
}

TEST_CASE("depth-gradient geodesic converges under step refinement") {
  auto m = testmedia::make("1", "1/(1+0.1*x3)^2", "1");
  const Vector3d x0(-0.2, 0.1, 0.0), v0(1, 0.3, 0.5);
  TraceOptions coarse, fine;
  fine.h = 1e-4;
  auto a = trace_geodesic(m, WaveMode::S, x0, v0, coarse);
  auto b = trace_geodesic(m, WaveMode::S, x0, v0, fine);
  double worst = 0.0;
  for (double t = -0.8; t <= 0.8; t += 0.1) worst = std::max(worst, (a.at(t).x - b.at(t).x).norm());
  CHECK(worst < 1e-6);
  CHECK(std::abs(a.t_plus() - b.t_plus()) < 1e-6);
}

TEST_CASE("unit speed and frame orthonormality are preserved") {
  auto m = testmedia::smooth();
  for (WaveMode mode : {WaveMode::P, WaveMode::S}) {
    auto g = trace_geodesic(m, mode, Vector3d(0.1, -0.2, 0.05), Vector3d(0.3, 1, -0.4));
    CHECK(frame_drift(g) < 1e-8);
    CHECK(g.t_minus() < 0.0);
    CHECK(g.t_plus() > 0.0);
  }
}

TEST_CASE("transport round trip returns the initial frame") {
  auto m = testmedia::smooth();
  auto g = trace_geodesic(m, WaveMode::P, Vector3d::Zero(), Vector3d(1, 0.2, 0.1));
  const GeodesicState s0 = g.at(0.0);
  const int n = static_cast<int>(std::floor(g.t_plus() / g.step()));
  GeodesicState s = integrate(m, WaveMode::P, s0, n * g.step(), n);
  s = integrate(m, WaveMode::P, s, -n * g.step(), n);
  CHECK((s.e2 - s0.e2).norm() < 1e-8);
  CHECK((s.e3 - s0.e3).norm() < 1e-8);
  CHECK((s.x - s0.x).norm() < 1e-8);
}

TEST_CASE("parallel transport of a rotated basis") {
  auto m = testmedia::smooth();
  auto g = trace_geodesic(m, WaveMode::S, Vector3d::Zero(), Vector3d(0, 1, 0.3));
  const GeodesicState s0 = g.at(0.0);
  const double a = 0.7;
  const Vector3d e2 = std::cos(a) * s0.e2 + std::sin(a) * s0.e3;
  const Vector3d e3 = -std::sin(a) * s0.e2 + std::cos(a) * s0.e3;
  auto h = parallel_transport(g, e2, e3);
  CHECK(frame_drift(h) < 1e-8);
  const auto& n = h.node(h.size() - 1);
  const auto& o = g.node(g.size() - 1);
  CHECK((n.x - o.x).norm() == 0.0);
  CHECK((n.e2 - (std::cos(a) * o.e2 + std::sin(a) * o.e3)).norm() < 1e-10);
  CHECK_THROWS_AS(parallel_transport(g, 2.0 * e2, e3), GeometryError);
  CHECK_THROWS_AS(parallel_transport(g, s0.v, e3), GeometryError);
}

TEST_CASE("trace errors") {
  auto m = MaterialModel::homogeneous(2, 1, 1, 0, 0, 0, 1.5, 0.25);
  TraceOptions opt;
  opt.trapping_bound = 0.5;
  CHECK_THROWS_AS(trace_geodesic(m, WaveMode::S, Vector3d::Zero(), Vector3d(1, 0, 0), opt), GeometryError);
  CHECK_THROWS_AS(trace_geodesic(m, WaveMode::S, Vector3d::Zero(), Vector3d::Zero()), GeometryError);
  CHECK_THROWS_AS(trace_geodesic(m, WaveMode::S, Vector3d(1.4, 0, 0), Vector3d(1, 0, 0)), GeometryError);
}

TEST_CASE("geodesic csv dump") {
  auto m = MaterialModel::homogeneous(2, 1, 1, 0, 0, 0, 1.5, 0.25);
  auto g = trace_geodesic(m, WaveMode::S, Vector3d::Zero(), Vector3d(1, 0, 0), {0.1});
  std::ostringstream out;
  g.write_csv(out);
  const std::string text = out.str();
  CHECK(text.rfind("t,x1,x2,x3,v1,v2,v3,e2_1,e2_2,e2_3,e3_1,e3_2,e3_3\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == g.size() + 1);
}

TEST_CASE("chart matches the geodesic on the axis and is Fermi to first order") {
  auto m = testmedia::smooth();
  auto geo = trace_shared(m, WaveMode::P, Vector3d(0.1, 0, -0.1), Vector3d(1, 0.4, 0.2));
  FermiChart chart(geo, 0.05);
  for (double s : {-0.4, 0.0, 0.3}) {
    CHECK((chart.forward(s, 0, 0) - geo->at(0.05 + s).x).norm() < 1e-8);
    const Vector3d sy(s, 0, 0);
    CHECK((chart.inverse_metric_y(sy) - Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    const double h = 1e-3;
    for (int k = 0; k < 3; ++k) {
      const Vector3d e = h * Vector3d::Unit(k);
      const Matrix3d d = (chart.inverse_metric_y(sy + e) - chart.inverse_metric_y(sy - e)) / (2 * h);
      CHECK(d.cwiseAbs().maxCoeff() < 1e-5);
    }
    const Eigen::Matrix4d gbar = chart.lorentz_inverse_metric(s * std::sqrt(2.0), Vector3d::Zero());
    Eigen::Matrix4d flat = Eigen::Matrix4d::Zero();
    flat(0, 1) = flat(1, 0) = 1.0;
    flat(2, 2) = flat(3, 3) = 1.0;
    CHECK((gbar - flat).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("christoffel symbols: trivial cases") {
  auto hom = MaterialModel::homogeneous(2, 1, 1, 0, 0, 0, 1.5, 0.25);
  FermiChart flat(trace_shared(hom, WaveMode::P, Vector3d::Zero(), Vector3d(1, 1, 0)), 0.0);
  for (const auto& m : flat.christoffel(Vector3d(0.2, 0.1, -0.1))) CHECK(m.cwiseAbs().maxCoeff() < 1e-12);

  auto lin = testmedia::make("1", "(1+0.1*x1)^2", "1");
  FermiChart chart(trace_shared(lin, WaveMode::S, Vector3d::Zero(), Vector3d(1, 0, 0)), 0.0);
  const Christoffel g = chart.christoffel(Vector3d::Zero());
  Christoffel expect;
  for (auto& e : expect) e.setZero();
  expect[0](0, 0) = 0.1;
  for (int a = 1; a < 3; ++a) {
    expect[a](0, a) = expect[a](a, 0) = 0.1;
    expect[0](a, a) = -0.1;
  }
  CHECK(max_abs(g, expect) < 1e-10);
  CHECK_THROWS_AS(chart.christoffel(Vector3d(0, 0.6, 0)), GeometryError);
}

TEST_CASE("christoffel closed form agrees with the metric finite differences on the axis") {
  auto m = testmedia::smooth();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vector3d dir(u(rng), u(rng), u(rng));
    FermiChart chart(trace_shared(m, WaveMode::P, 0.3 * Vector3d(u(rng), u(rng), u(rng)), dir), 0.0);
    const Vector3d sy(0.4 * u(rng), 0, 0);
    const Christoffel a = chart.christoffel(sy);
    const Christoffel b = chart.christoffel_fd(sy);
    for (int k = 0; k < 3; ++k) CHECK((a[k] - a[k].transpose()).cwiseAbs().maxCoeff() == 0.0);
    worst = std::max(worst, max_abs(a, b));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("axis matrix D") {
  auto hom = MaterialModel::homogeneous(2, 1, 1, 0, 0, 0, 1.5, 0.25);
  FermiChart flat(trace_shared(hom, WaveMode::S, Vector3d::Zero(), Vector3d(0, 0, 1)), 0.0);
  flat.prepare_axis(-1, 1);
  CHECK(flat.D(0.3).isZero());
  CHECK(flat.D_fd(0.3).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(FermiChart::C() == Eigen::Vector3d(0, 2, 2).asDiagonal().toDenseMatrix());

  auto m = testmedia::smooth();
  for (WaveMode mode : {WaveMode::P, WaveMode::S}) {
    FermiChart chart(trace_shared(m, mode, Vector3d(0, 0.1, 0), Vector3d(1, -0.3, 0.6)), 0.0);
    chart.prepare_axis(-1, 1);
    for (double tau : {-0.8, -0.21, 0.0, 0.55, 0.93}) {
      const Matrix3d full = chart.D_fd(tau);
      const Matrix3d half = chart.D_fd(tau, 5e-3, 1e-2);
      const Matrix3d curv = chart.D_curvature(tau);
      INFO("tau = " << tau);
      CHECK(full.row(0).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((full - half).cwiseAbs().maxCoeff() < 1e-4);
      CHECK((full - full.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((full - curv).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((chart.D(tau) - curv).cwiseAbs().maxCoeff() < 1e-5);
      CHECK(curv.bottomRightCorner<2, 2>().cwiseAbs().maxCoeff() > 1e-4);
    }
    const AxisTaylor t = chart.axis_taylor(0.2);
    const double h = 1e-4;
    const double dc = (chart.axis_taylor(0.2 + h).c - chart.axis_taylor(0.2 - h).c) / (2 * h);
    CHECK(std::abs(dc - t.dc) < 1e-7);
    CHECK(t.c == doctest::Approx(std::sqrt(t.modulus / t.rho)).epsilon(1e-14));
  }
}

TEST_CASE("cached forward map and inversion") {
  auto m = testmedia::smooth();
  FermiChart chart(trace_shared(m, WaveMode::S, Vector3d::Zero(), Vector3d(1, 0.5, 0)), 0.0);
  chart.build_cache(-0.6, 0.6);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector3d sy(0.5 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
    const Vector3d x = chart.forward(sy);
    worst = std::max(worst, (chart.forward_cached(sy) - x).norm());
    Vector3d back;
    REQUIRE(chart.invert(x, back));
    CHECK((back - sy).norm() < 1e-5);
  }
  CHECK(worst < 1e-5);
  Vector3d sy;
  CHECK_FALSE(chart.invert(Vector3d(0, 0, 1.2), sy));
}
