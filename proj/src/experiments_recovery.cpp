#include <algorithm>
#include <cmath>
#include <numbers>

#include "elastobeam/recovery.hpp"
#include "experiments_detail.hpp"

namespace elastobeam::detail {

using Eigen::Vector3d;
using nlohmann::json;

namespace {

std::shared_ptr<FermiChart> p_chart(const MaterialModel& m, const Vector3d& x0, const Vector3d& v0, double step) {
  if (!m.box().contains_inner(x0)) throw ConfigError("point lies outside the physical box");
  if (v0.norm() == 0.0) throw ConfigError("geodesic direction must be nonzero");
  TraceOptions to;
  to.h = step;
  auto geo = std::make_shared<const Geodesic>(trace_geodesic(m, WaveMode::P, x0, v0, to));
  return std::make_shared<FermiChart>(geo, 0.0);
}

std::shared_ptr<const WeightFamily> family_on(std::shared_ptr<FermiChart> chart, double lo, double hi, double step) {
  lo = std::max(lo, chart->tau_minus() + 0.05);
  hi = std::min(hi, chart->tau_plus() - 0.05);
  if (!(lo < 0.0 && hi > 0.0)) throw ConfigError("geodesic interval around the point is empty");
  return std::make_shared<const WeightFamily>(std::move(chart), lo, hi, WeightFamily::default_hessians(), step);
}

double rel(double got, double truth) { return std::abs(got - truth) / std::max(std::abs(truth), 1.0); }

}  // namespace

ExperimentResult run_recover_ab(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"points", "configurations", "method", "rho", "nodes", "delta", "tolerance"});
  const MaterialModel m = load_medium(ctx, p);
  const std::vector<Vector3d> points = p.vec3_list("points", {Vector3d::Zero()});
  std::vector<std::pair<Vector3d, Vector3d>> configs;
  if (p.has("configurations")) {
    const json& c = p.raw("configurations");
    if (!c.is_array()) throw ConfigError("configurations must be an array of {xi1, xi2} objects");
    for (const json& e : c) {
      if (!e.is_object() || e.size() != 2 || !e.contains("xi1") || !e.contains("xi2")) {
        throw ConfigError("each configuration must have exactly the keys xi1 and xi2");
      }
      configs.emplace_back(as_vec3(e["xi1"], "xi1").normalized(), as_vec3(e["xi2"], "xi2").normalized());
    }
  } else {
    configs = {{Vector3d(1, 0, 0), Vector3d(0, 1, 0)}, {Vector3d(1, 0, 0), Vector3d(0.5, std::sqrt(3.0) / 2.0, 0)}};
  }
  if (configs.size() < 2) throw ConfigError("at least two configurations are needed");
  const std::string method = p.str("method", "exact");
  if (method != "exact" && method != "quadrature") throw ConfigError("method must be \"exact\" or \"quadrature\"");
  const bool quad = method == "quadrature";
  const std::vector<double> rhos = p.list("rho", {128.0, 256.0});
  for (double v : rhos) {
    if (!(v > 0.0)) throw ConfigError("rho values must be positive");
  }
  const int nodes = p.integer("nodes", 16);
  if (nodes < 2) throw ConfigError("nodes must be at least 2");
  TripleOptions topt;
  topt.delta = p.positive("delta", 0.5);
  QuadratureOptions qopt;
  qopt.nodes = nodes;
  const double tol = p.positive("tolerance", quad ? 0.1 : 1e-10);

  ExperimentResult r;
  RecoveryReport report;
  json meas = json::array();
  auto f = open_output(ctx, r, "recover_ab.csv");
  f << "x1,x2,x3,A_true,A_recovered,B_true,B_recovered,residual\n";
  double worst = 0.0;
  for (const Vector3d& x : points) {
    const Moduli k = moduli_at(m, x);
    std::vector<SymbolSample> samples;
    for (const auto& [xi1, xi2] : configs) {
      const CovectorTriple tr = select_covectors(m, x, xi1, xi2);
      if (quad) {
        const InteractionMeasurement im = measure_interaction(m, tr, rhos, topt, qopt, ctx.seed);
        meas.push_back(im.to_json());
        samples.push_back({tr, im.symbol_estimate});
      } else {
        samples.push_back({tr, leading_symbol(k, tr)});
      }
    }
    const ABRecovery ab = recover_AB(k.lambda, k.mu, samples);
    report.ab.push_back(ab);
    worst = std::max({worst, rel(ab.A, k.A), rel(ab.B, k.B)});
    f << x[0] << ',' << x[1] << ',' << x[2] << ',' << k.A << ',' << ab.A << ',' << k.B << ',' << ab.B << ','
      << ab.residual << '\n';
  }
  f.close();
  report.point = points.front();
  report.inventory = {{"method", method}, {"points", points.size()}, {"configurations", configs.size()}};
  if (quad) report.inventory["rho"] = rhos;
  {
    auto rf = open_output(ctx, r, "report.json");
    rf << report.to_json().dump(2) << '\n';
  }
  if (quad) {
    auto mf = open_output(ctx, r, "measurements.json");
    mf << meas.dump(2) << '\n';
  }
  r.results = {{"max_relative_error", worst}, {"method", method}};
  r.checks.push_back(make_check("ab_recovery", worst, tol, worst <= tol));
  return r;
}

ExperimentResult run_recover_c(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"points", "directions", "tau_max", "basis_spacing", "noise", "tolerance", "step"});
  const MaterialModel m = load_medium(ctx, p);
  const std::vector<Vector3d> points = p.vec3_list("points", {Vector3d::Zero()});
  const std::vector<Vector3d> dirs =
      p.vec3_list("directions", {Vector3d(1, 0, 0), Vector3d(0, 1, 0), Vector3d(0, 0, 1)});
  if (points.empty() || dirs.empty()) throw ConfigError("points and directions must be non-empty");
  const double tau_max = p.positive("tau_max", 1.0), step = p.positive("step", 1e-3);
  CRecoveryOptions opt;
  opt.basis_spacing = p.positive("basis_spacing", 0.05);
  opt.noise = p.positive("noise", 1e-6);
  const double tol = p.positive("tolerance", 0.1);

  ExperimentResult r;
  RecoveryReport report;
  report.point = points.front();
  auto fp = open_output(ctx, r, "recover_c_points.csv");
  fp << "x1,x2,x3,C_true,C_recovered\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector3d& x0 = points[i];
    std::vector<GeodesicData> data;
    for (std::size_t g = 0; g < dirs.size(); ++g) {
      auto fam = family_on(p_chart(m, x0, dirs[g], 1e-3), -tau_max, tau_max, step);
      std::vector<double> f(fam->tau().size());
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = c_integrand(m, fam->point(k));
      data.push_back({fam, weighted_ray_transform(f, *fam)});
      auto tf = open_output(ctx, r, "transforms_p" + std::to_string(i) + "_g" + std::to_string(g) + ".csv");
      write_transform_table(tf, *fam, data.back().values);
    }
    const CRecovery c = recover_C_at_point(m, x0, data, opt);
    report.c.push_back(c);
    const double truth = m.C().eval(x0);
    worst = std::max(worst, rel(c.C, truth));
    fp << x0[0] << ',' << x0[1] << ',' << x0[2] << ',' << truth << ',' << c.C << '\n';
    if (i == 0) {
      auto f = open_output(ctx, r, "recover_c.csv");
      f << "tau,C_true,C_recovered\n";
      const FermiChart& chart = data.front().family->chart();
      for (std::size_t k = 0; k < c.tau.front().size(); ++k) {
        const double t = c.tau.front()[k];
        const Vector3d x = chart.axis_state(t / std::numbers::sqrt2).x;
        const double scale = std::pow(m.speed(WaveMode::P, x), 4.5) * std::pow(m.rho().eval(x), 1.5);
        f << t << ',' << m.C().eval(x) << ',' << c.f.front()[k] * scale << '\n';
      }
    }
  }
  fp.close();
  report.inventory = {{"points", points.size()},
                      {"geodesics_per_point", dirs.size()},
                      {"family_size", WeightFamily::default_hessians().size()},
                      {"basis_spacing", opt.basis_spacing},
                      {"noise", opt.noise}};
  {
    auto rf = open_output(ctx, r, "report.json");
    rf << report.to_json().dump(2) << '\n';
  }
  r.results = {{"max_relative_error", worst}};
  r.checks.push_back(make_check("c_recovery", worst, tol, worst <= tol));
  return r;
}

ExperimentResult run_transform(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"x0", "v0", "tau", "field", "step", "expected", "expected_member", "tolerance"});
  const MaterialModel m = load_medium(ctx, p);
  const std::vector<double> tau = p.list("tau", {-1.0, 1.0});
  if (tau.size() != 2 || !(tau[0] < 0.0 && tau[1] > 0.0)) throw ConfigError("tau must be [lo, hi] with lo < 0 < hi");
  const double step = p.positive("step", 1e-3), tol = p.positive("tolerance", 1e-8);
  auto fam = family_on(p_chart(m, p.vec3("x0", Vector3d::Zero()), p.vec3("v0", Vector3d(1, 0, 0)), 1e-3), tau[0],
                       tau[1], step);
  std::vector<double> f(fam->tau().size());
  if (p.has("field")) {
    auto parse = [&]() {
      try {
        return FieldExpr::parse(p.str("field", ""));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("field expression: ") + e.what());
      }
    };
    f = fam->sample(parse());
  } else {
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = c_integrand(m, fam->point(k));
  }
  const std::vector<cplx> values = weighted_ray_transform(f, *fam);

  ExperimentResult r;
  {
    auto tf = open_output(ctx, r, "transform.csv");
    write_transform_table(tf, *fam, values);
  }
  double ode = 0.0, blk = 0.0;
  for (std::size_t i = 0; i < fam->size(); ++i) {
    ode = std::max(ode, fam->reduced_ode_residual(i));
    blk = std::max(blk, fam->block_determinant_residual(i));
  }
  json vals = json::array();
  for (const cplx& v : values) vals.push_back({v.real(), v.imag()});
  r.results = {{"tau_first", fam->tau().front()},
               {"tau_last", fam->tau().back()},
               {"values", vals},
               {"reduced_ode_residual", ode},
               {"block_determinant_residual", blk}};
  r.checks.push_back(make_check("reduced_ode_residual", ode, 1e-6, ode <= 1e-6));
  r.checks.push_back(make_check("block_determinant", blk, 1e-10, blk <= 1e-10));
  if (p.has("expected")) {
    const std::vector<double> e = p.list("expected", {});
    if (e.size() != 2) throw ConfigError("expected must be [re, im]");
    const int member = p.integer("expected_member", 2);
    if (member < 0 || static_cast<std::size_t>(member) >= values.size()) throw ConfigError("expected_member out of range");
    const double err = std::abs(values[static_cast<std::size_t>(member)] - cplx(e[0], e[1]));
    r.results["expected_error"] = err;
    r.checks.push_back(make_check("expected_value", err, tol, err <= tol));
  }
  return r;
}

}  // namespace elastobeam::detail
