#include <cmath>
#include <numbers>

#include "doctest.h"
#include "elastobeam/recovery.hpp"
#include "media.hpp"

using namespace elastobeam;
using Eigen::Vector3d;

namespace {

std::shared_ptr<FermiChart> p_chart(const MaterialModel& m, const Vector3d& x0, const Vector3d& v0) {
  auto geo = std::make_shared<const Geodesic>(trace_geodesic(m, WaveMode::P, x0, v0));
  return std::make_shared<FermiChart>(geo, 0.0);
}

}  // namespace

TEST_CASE("(A, B) recovery from exact symbols") {
  const MaterialModel m = testmedia::make("2", "1", "1", 1.5, 0.25, "4", "1", "0");
  const Moduli k = moduli_at(m, Vector3d::Zero());
  std::vector<SymbolSample> s;
  for (const Vector3d& xi2 : {Vector3d(0, 1, 0), Vector3d(0.5, std::sqrt(3.0) / 2.0, 0)}) {
    const CovectorTriple tr = select_covectors(m, Vector3d::Zero(), Vector3d(1, 0, 0), xi2);
    s.push_back({tr, leading_symbol(k, tr)});
  }
  const ABRecovery r = recover_AB(2.0, 1.0, s);
  CHECK(std::abs(r.A - 4.0) < 1e-10);
  CHECK(std::abs(r.B - 1.0) < 1e-10);
  CHECK(r.residual < 1e-10);

  const MaterialModel z = testmedia::make("2", "1", "1");
  const Moduli kz = moduli_at(z, Vector3d::Zero());
  for (SymbolSample& e : s) e.value = leading_symbol(kz, e.triple);
  const ABRecovery rz = recover_AB(2.0, 1.0, s);
  CHECK(std::abs(rz.A) < 1e-12);
  CHECK(std::abs(rz.B) < 1e-12);

  std::vector<SymbolSample> same{s[0], s[0]};
  CHECK_THROWS_AS(recover_AB(2.0, 1.0, same), RecoveryError);
  CHECK_THROWS_AS(recover_AB(2.0, 1.0, {s[0]}), RecoveryError);
}

TEST_CASE("weighted ray transform closed form") {
  const MaterialModel m = testmedia::make("2", "1", "1");
  auto chart = p_chart(m, Vector3d::Zero(), Vector3d(1, 0, 0));
  const WeightFamily fam(chart, -1.0, 1.0, WeightFamily::default_hessians());
  CHECK(fam.size() == 9);
  CHECK(fam.tau().size() == 2001);
  std::size_t unit = 0;
  while (std::abs(fam.member(unit).H0(1, 1) - cplx(0, 1)) > 0 || std::abs(fam.member(unit).H0(2, 2) - cplx(0, 1)) > 0) {
    ++unit;
  }
  for (std::size_t k = 0; k < fam.tau().size(); k += 100) {
    CHECK(std::abs(fam.member(unit).weight[k] - 1.0 / cplx(1.0, 2.0 * fam.tau()[k])) < 1e-12);
  }
  const std::vector<double> one(fam.tau().size(), 1.0), zero(fam.tau().size(), 0.0);
  const std::vector<cplx> t1 = weighted_ray_transform(one, fam);
  CHECK(std::abs(t1[unit] - std::atan(2.0)) < 1e-8);
  for (const cplx& v : weighted_ray_transform(zero, fam)) CHECK(v == cplx(0.0));

  std::vector<double> f(one.size()), g(one.size()), h(one.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = std::sin(fam.tau()[k]);
    g[k] = fam.tau()[k] * fam.tau()[k];
    h[k] = 2.0 * f[k] - 3.0 * g[k];
  }
  const auto tf = weighted_ray_transform(f, fam), tg = weighted_ray_transform(g, fam),
             th = weighted_ray_transform(h, fam);
  for (std::size_t i = 0; i < fam.size(); ++i) CHECK(std::abs(th[i] - (2.0 * tf[i] - 3.0 * tg[i])) < 1e-12);
  CHECK_THROWS_AS(weighted_ray_transform(std::vector<double>(10, 1.0), fam), RecoveryError);

  // An odd panel count exercises the 3/8 closing rule.
  const WeightFamily odd(chart, -1.0, 0.999, {cplx(0, 1) * Matrix3cd::Identity()});
  const std::vector<double> one_odd(odd.tau().size(), 1.0);
  const cplx exact = (std::log(cplx(1.0, 1.998)) - std::log(cplx(1.0, -2.0))) / cplx(0.0, 2.0);
  CHECK(std::abs(weighted_ray_transform(one_odd, odd)[0] - exact) < 1e-8);
}

TEST_CASE("weight family block structure in a smooth medium") {
  const MaterialModel m = testmedia::smooth();
  auto chart = p_chart(m, Vector3d(0.1, -0.2, 0.1), Vector3d(1, 0.3, -0.2));
  const double lo = std::max(-0.8, chart->tau_minus() + 0.05), hi = std::min(0.8, chart->tau_plus() - 0.05);
  const WeightFamily fam(chart, lo, hi, WeightFamily::default_hessians());
  for (std::size_t i = 0; i < fam.size(); ++i) {
    CHECK(fam.reduced_ode_residual(i) <= 1e-6);
    CHECK(fam.block_determinant_residual(i) <= 1e-10);
    for (const cplx& w : fam.member(i).weight) CHECK(std::abs(w) > 0.0);
  }
}

TEST_CASE("C recovery from constant and zero data") {
  const MaterialModel m = testmedia::make("2", "1", "1", 1.5, 0.25, "0", "0", "3");
  const Vector3d x0 = Vector3d::Zero();
  std::vector<GeodesicData> data;
  for (const Vector3d& v : {Vector3d(1, 0, 0), Vector3d(0, 1, 0)}) {
    auto fam = std::make_shared<const WeightFamily>(p_chart(m, x0, v), -1.0, 1.0, WeightFamily::default_hessians());
    std::vector<double> f(fam->tau().size());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = c_integrand(m, fam->point(k));
    data.push_back({fam, weighted_ray_transform(f, *fam)});
  }
  const CRecovery r = recover_C_at_point(m, x0, data);
  CHECK(std::abs(r.C - 3.0) < 3e-3);
  for (GeodesicData& g : data) std::fill(g.values.begin(), g.values.end(), cplx(0.0));
  CHECK(recover_C_at_point(m, x0, data).C == 0.0);
  data[0].values.pop_back();
  CHECK_THROWS_AS(recover_C_at_point(m, x0, data), RecoveryError);
}

TEST_CASE("transverse limit on a homogeneous medium") {
  const MaterialModel m = testmedia::make("2", "1", "1", 1.5, 0.25, "0", "0", "1");
  auto chart = p_chart(m, Vector3d::Zero(), Vector3d(1, 0, 0));
  chart->build_cache(-0.8, 0.8);
  const GaussianBeam beam(chart, {});
  const std::vector<double> tau{-0.5, -0.25, 0.0, 0.25, 0.5};
  const TransverseLimit tl = c_transverse_limit(beam, tau, {64.0, 128.0});
  const cplx K = tl.constant_at_centre();
  CHECK(std::abs(K - c_limit_constant(beam.riccati())) < 0.01 * std::abs(K));
  CHECK(tl.profile_error(K) < 0.05);
  for (std::size_t k = 0; k < tau.size(); ++k) {
    CHECK(std::abs(tl.model[k] - std::pow(2.0, -4.5) / cplx(1.0, 2.0 * tau[k])) < 1e-10);
  }
  const MaterialModel z = testmedia::make("2", "1", "1");
  auto cz = p_chart(z, Vector3d::Zero(), Vector3d(1, 0, 0));
  cz->build_cache(-0.8, 0.8);
  const TransverseLimit tz = c_transverse_limit(GaussianBeam(cz, {}), {0.0, 0.3}, {64.0});
  for (const cplx& v : tz.values[0]) CHECK(v == cplx(0.0));
}

TEST_CASE("C recovery of a bump in a heterogeneous medium") {
  const MaterialModel m = testmedia::make("2 + 0.2*sin(x1 + 0.5*x2)", "1 + 0.1*cos(x2 - 0.7*x3)",
                                          "1 + 0.1*x3^2 + 0.05*x1", 1.5, 0.25, "0", "0",
                                          "1 + 2*exp(-((x1-0.1)^2 + (x2+0.1)^2 + x3^2)/0.5)");
  const Vector3d x0(0.3, -0.2, 0.1);
  std::vector<GeodesicData> data;
  for (const Vector3d& v : {Vector3d(1, 0, 0), Vector3d(0, 1, 0), Vector3d(0, 0, 1)}) {
    auto chart = p_chart(m, x0, v);
    const double lo = std::max(-1.0, chart->tau_minus() + 0.05), hi = std::min(1.0, chart->tau_plus() - 0.05);
    auto fam = std::make_shared<const WeightFamily>(chart, lo, hi, WeightFamily::default_hessians());
    std::vector<double> f(fam->tau().size());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = c_integrand(m, fam->point(k));
    data.push_back({fam, weighted_ray_transform(f, *fam)});
  }
  const CRecovery r = recover_C_at_point(m, x0, data);
  const double truth = m.C().eval(x0);
  CHECK(std::abs(r.C - truth) < 0.1 * truth);
  CHECK(r.residual <= r.target * (1.0 + 1e-9));
  CHECK(r.f.size() == 3);
}
