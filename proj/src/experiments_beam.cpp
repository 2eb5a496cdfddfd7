#include <algorithm>
#include <cmath>
#include <random>

#include "elastobeam/beam.hpp"
#include "elastobeam/interaction.hpp"
#include "experiments_detail.hpp"

namespace elastobeam::detail {

using Eigen::Vector3d;

namespace {

std::shared_ptr<FermiChart> make_chart(const MaterialModel& m, WaveMode mode, const Vector3d& x0, const Vector3d& v0,
                                       double step) {
  if (!m.box().contains_inner(x0)) throw ConfigError("x0 lies outside the physical box");
  if (v0.norm() == 0.0) throw ConfigError("v0 must be nonzero");
  TraceOptions to;
  to.h = step;
  auto geo = std::make_shared<const Geodesic>(trace_geodesic(m, mode, x0, v0, to));
  return std::make_shared<FermiChart>(geo, 0.0);
}

}  // namespace

ExperimentResult run_validate(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"grid_n"});
  const int n = p.integer("grid_n", 33);
  if (n < 2) throw ConfigError("grid_n must be at least 2");
  const MaterialModel m = load_medium(ctx, p, false);
  const ValidationReport v = m.validate(n);
  ExperimentResult r;
  auto f = open_output(ctx, r, "validate.csv");
  f << "min_mu,min_bulk,min_rho,min_speed_gap,grid_n,pass\n";
  f << v.min_mu << ',' << v.min_bulk << ',' << v.min_rho << ',' << v.min_speed_gap << ',' << v.grid_n << ','
    << (v.pass ? 1 : 0) << '\n';
  r.results = {{"min_mu", v.min_mu},   {"min_bulk", v.min_bulk},         {"min_rho", v.min_rho},
               {"min_speed_gap", v.min_speed_gap}, {"grid_n", v.grid_n}, {"reason", v.reason}};
  if (v.first_violation) {
    r.results["first_violation"] = {(*v.first_violation)[0], (*v.first_violation)[1], (*v.first_violation)[2]};
  }
  r.checks.push_back(make_check("medium_valid", v.min_speed_gap, 0.0, v.pass));
  return r;
}

ExperimentResult run_trace(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"mode", "x0", "v0", "step", "drift_tolerance"});
  const MaterialModel m = load_medium(ctx, p);
  const WaveMode mode = parse_mode(p.str("mode", "P"));
  const double step = p.positive("step", 1e-3), tol = p.positive("drift_tolerance", 1e-6);
  auto chart = make_chart(m, mode, p.vec3("x0", Vector3d::Zero()), p.vec3("v0", Vector3d(1, 0, 0)), step);
  const Geodesic& g = chart->geodesic();
  ExperimentResult r;
  auto f = open_output(ctx, r, "geodesic.csv");
  g.write_csv(f);
  const double drift = frame_drift(g);
  r.results = {{"t_minus", g.t_minus()}, {"t_plus", g.t_plus()}, {"nodes", g.size()}, {"frame_drift", drift}};
  r.checks.push_back(make_check("frame_drift", drift, tol, drift <= tol));
  return r;
}

ExperimentResult run_riccati_check(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"mode", "x0", "v0", "tau", "step", "h0_scale", "tolerance"});
  const MaterialModel m = load_medium(ctx, p);
  const WaveMode mode = parse_mode(p.str("mode", "P"));
  const double step = p.positive("step", 1e-3), tol = p.positive("tolerance", 1e-8);
  const double sigma = p.positive("h0_scale", 1.0);
  auto chart = make_chart(m, mode, p.vec3("x0", Vector3d::Zero()), p.vec3("v0", Vector3d(1, 0, 0)), 1e-3);
  BeamOptions opt;
  opt.pol = mode == WaveMode::P ? Polarization::P : Polarization::SV;
  opt.H0 = cplx(0.0, sigma) * Matrix3cd::Identity();
  opt.step = step;
  const std::vector<double> tau = p.list("tau", {});
  if (!tau.empty()) {
    if (tau.size() != 2 || !(tau[0] <= 0.0 && tau[1] >= 0.0 && tau[1] > tau[0])) {
      throw ConfigError("tau must be [lo, hi] with lo <= 0 <= hi");
    }
    opt.tau_lo = tau[0];
    opt.tau_hi = tau[1];
  }
  const GaussianBeam beam(chart, opt);
  const RiccatiPath& path = beam.riccati();
  ExperimentResult r;
  auto f = open_output(ctx, r, "riccati.csv");
  beam.write_csv(f);
  const double drift = path.invariant_drift();
  r.results = {{"tau_first", path.tau_first()},
               {"tau_last", path.tau_last()},
               {"nodes", path.size()},
               {"invariant_drift", drift},
               {"min_imag_eigenvalue", path.min_imag_eigenvalue()},
               {"max_asymmetry", path.max_asymmetry()}};
  r.checks.push_back(make_check("conservation_drift", drift, tol, drift <= tol));
  r.checks.push_back(make_check("imag_H_positive", path.min_imag_eigenvalue(), 0.0, path.min_imag_eigenvalue() > 0.0));
  if (m.homogeneous_fields()) {
    double worst = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const cplx q(1.0, 2.0 * sigma * path.tau_at(k));
      Matrix3cd H = Matrix3cd::Zero();
      H.diagonal() << cplx(0.0, sigma), cplx(0.0, sigma) / q, cplx(0.0, sigma) / q;
      worst = std::max(worst, (path.H(k) - H).cwiseAbs().maxCoeff());
    }
    r.results["closed_form_error"] = worst;
    r.checks.push_back(make_check("homogeneous_closed_form", worst, 1e-10, worst <= 1e-10));
  }
  return r;
}

ExperimentResult run_beam_residual(const ExperimentContext& ctx) {
  const Params p(ctx.config, {"mode", "x0", "v0", "alpha", "tau", "radii", "directions", "min_slope",
                              "transport_tau", "transport_tolerance"});
  const MaterialModel m = load_medium(ctx, p);
  const WaveMode mode = parse_mode(p.str("mode", "P"));
  const int alpha = p.integer("alpha", 1);
  if (alpha != 1 && alpha != 2) throw ConfigError("alpha must be 1 or 2");
  const double tau = p.num("tau", 0.2);
  std::vector<double> default_radii;
  for (double q = 1e-3; q <= 1.01e-1; q *= std::pow(10.0, 0.25)) default_radii.push_back(q);
  std::vector<double> radii = p.list("radii", default_radii);
  for (double q : radii) {
    if (!(q > 0.0)) throw ConfigError("radii must be positive");
  }
  std::sort(radii.begin(), radii.end());
  const int ndir = p.integer("directions", 3);
  if (ndir < 1) throw ConfigError("directions must be at least 1");
  const double min_slope = p.positive("min_slope", 2.9);
  const std::vector<double> ttau = p.list("transport_tau", {-0.2, 0.0, 0.2});
  const double ttol = p.positive("transport_tolerance", 1e-6);

  auto chart = make_chart(m, mode, p.vec3("x0", Vector3d::Zero()), p.vec3("v0", Vector3d(1, 0, 0)), 1e-3);
  BeamOptions opt;
  opt.pol = mode == WaveMode::P ? Polarization::P : Polarization::SV;
  opt.alpha = alpha;
  const GaussianBeam beam(chart, opt);
  if (tau < beam.riccati().tau_first() || tau > beam.riccati().tau_last()) throw ConfigError("tau outside the beam");

  std::mt19937 rng(ctx.seed);
  std::normal_distribution<double> nd;
  std::vector<Vector3d> dirs;
  for (int i = 0; i < ndir; ++i) dirs.push_back(Vector3d(nd(rng), nd(rng), nd(rng)).normalized());

  ExperimentResult r;
  std::vector<double> res;
  {
    auto f = open_output(ctx, r, "beam_residual.csv");
    f << "rho,residual_norm\n";
    for (double q : radii) {
      double worst = 0.0;
      for (const Vector3d& d : dirs) worst = std::max(worst, std::abs(beam.eikonal_residual(tau, q * d)));
      res.push_back(worst);
      f << q << ',' << worst << '\n';
    }
  }
  const double peak = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
  const double slope = peak > 0.0 ? loglog_slope(radii, res) : 0.0;
  r.results["eikonal_slope"] = slope;
  r.results["max_eikonal_residual"] = peak;
  if (radii.size() >= 2) {
    r.checks.push_back(make_check("eikonal_order", slope, min_slope, slope >= min_slope || peak <= 1e-12));
  }

  double tworst = 0.0;
  {
    auto f = open_output(ctx, r, "transport.csv");
    f << "tau,value,b_factor\n";
    for (double t : ttau) {
      const TransportResidual tr = transport_residual(beam, t);
      tworst = std::max(tworst, tr.value);
      f << t << ',' << tr.value << ',' << tr.b_factor << '\n';
    }
  }
  r.results["max_transport_residual"] = tworst;
  r.checks.push_back(make_check("transport_residual", tworst, ttol, tworst <= ttol));
  return r;
}

}  // namespace elastobeam::detail
