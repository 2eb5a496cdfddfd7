#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "elastobeam/interaction.hpp"
#include "elastobeam/parallel.hpp"
#include "elastobeam/quadrature.hpp"
#include "elastobeam/simd.hpp"

namespace elastobeam {

using Eigen::Matrix3d;
using Eigen::Matrix4cd;
using Eigen::Matrix4d;
using Eigen::Vector3d;
using Eigen::Vector4d;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double beam_speed(const CovectorTriple& tr, int k) { return k == 1 ? tr.cP : tr.cS; }

// Support radius of a beam around its axis point at a fixed time.
double support_radius(const TripleBeams& tb, int k) {
  return beam_speed(tb.triple, k) * tb.beam[static_cast<std::size_t>(k)]->options().delta / kSqrt2;
}

double pair_overlap(const TripleBeams& tb, int i, int j, double limit) {
  const Geodesic& gi = tb.beam[static_cast<std::size_t>(i)]->chart().geodesic();
  const Geodesic& gj = tb.beam[static_cast<std::size_t>(j)]->chart().geodesic();
  const double reach = support_radius(tb, i) + support_radius(tb, j);
  const double lo = std::max({gi.t_first(), gj.t_first(), -limit});
  const double hi = std::min({gi.t_last(), gj.t_last(), limit});
  const double dt = 0.005;
  double radius = 0.0;
  for (double sign : {-1.0, 1.0}) {
    const double end = sign < 0 ? -lo : hi;
    bool separated = false;
    for (double a = 0.0; a <= end; a += dt) {
      const double t = sign * a;
      const bool close = (gi.at(t).x - gj.at(t).x).norm() < reach;
      if (close && separated) throw InteractionError("beam tubes overlap again away from the interaction point");
      if (close) radius = std::max(radius, a);
      if (!close) separated = true;
    }
  }
  return radius;
}

// Samples all three beams at chart points and combines them into (S, F).
bool combine(const TripleBeams& tb, double tp, const std::array<Vector3d, 3>& sy, const std::array<Matrix3d, 3>& jti,
             const Moduli& mod, cplx& S, cplx& F, std::array<BeamSample, 3>* keep = nullptr) {
  std::array<BeamSample, 3> bs;
  double chi = 1.0;
  S = 0.0;
  std::array<Matrix3cd, 3> U;
  for (std::size_t k = 0; k < 3; ++k) {
    if (!tb.beam[k]->sample_at(tp, sy[k], jti[k], bs[k])) return false;
    chi *= bs[k].cutoff;
    if (tb.beam[k]->options().conjugate) {
      bs[k].phi = std::conj(bs[k].phi);
      bs[k].phi_t = std::conj(bs[k].phi_t);
      bs[k].grad_x = bs[k].grad_x.conjugate().eval();
      bs[k].amp = bs[k].amp.conjugate().eval();
    }
    S += tb.weight[k] * bs[k].phi;
    U[k] = bs[k].amp * bs[k].grad_x.transpose();
  }
  F = chi == 0.0 ? cplx(0.0) : chi * interaction_integrand(mod, U[1], U[2], U[0]);
  if (keep) *keep = bs;
  return true;
}

bool invert_all(const TripleBeams& tb, const Vector3d& x, std::array<Vector3d, 3>& sy, std::array<Matrix3d, 3>& jti) {
  for (std::size_t k = 0; k < 3; ++k) {
    Matrix3d J;
    if (!tb.beam[k]->chart().invert(x, sy[k], &J)) return false;
    jti[k] = J.transpose().inverse();
  }
  return true;
}

struct Whitening {
  Matrix4d M;
  double jac = 0.0;
  double re_norm = 0.0;  // spectral norm of Re(M^T Q M)
};

Whitening whiten(const Matrix4cd& Q) {
  Matrix4d im = Q.imag();
  im = 0.5 * (im + im.transpose()).eval();
  Eigen::LLT<Matrix4d> llt(im);
  if (llt.info() != Eigen::Success) throw InteractionError("imaginary part of the phase Hessian is not positive definite");
  Whitening w;
  const Matrix4d L = llt.matrixL();
  w.M = L.transpose().inverse();
  w.M.triangularView<Eigen::StrictlyLower>().setZero();
  w.jac = std::abs(w.M.determinant());
  Matrix4d re = w.M.transpose() * Q.real() * w.M;
  re = 0.5 * (re + re.transpose()).eval();
  w.re_norm = Eigen::SelfAdjointEigenSolver<Matrix4d>(re).eigenvalues().cwiseAbs().maxCoeff();
  return w;
}

// One tensor level: slice(dx, t, w, out) handles a spatial node with all time nodes.
template <class Slice>
cplx tensor_level(const Whitening& wh, double R, int n, double rho, Slice&& slice) {
  const QuadratureRule q = gauss_legendre(n, -R, R);
  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<cplx> part(nn * nn * nn);
  parallel_for(part.size(), [&](std::size_t idx) {
    const std::size_t i1 = idx / (nn * nn), i2 = (idx / nn) % nn, i3 = idx % nn;
    const Vector3d u(q.nodes[i1], q.nodes[i2], q.nodes[i3]);
    const double wx = q.weights[i1] * q.weights[i2] * q.weights[i3];
    const Vector3d dx = wh.M.block<3, 3>(1, 1) * u;
    const double tb = wh.M.block<1, 3>(0, 1).dot(u);
    std::vector<double> t(nn), w(nn);
    for (std::size_t j = 0; j < nn; ++j) {
      t[j] = tb + wh.M(0, 0) * q.nodes[j];
      w[j] = wx * q.weights[j];
    }
    part[idx] = slice(dx, t, w, rho);
  });
  cplx total = 0.0;
  for (const cplx& p : part) total += p;
  return total * wh.jac * rho * rho;
}

template <class Slice>
QuadratureResult two_levels(const Matrix4cd& Q, double rho, const QuadratureOptions& opt, Slice&& slice) {
  if (!(rho > 0.0)) throw InteractionError("frequency parameter must be positive");
  if (opt.nodes < 2) throw InteractionError("quadrature needs at least two nodes per dimension");
  const Whitening wh = whiten(Q);
  const double R = opt.half_width / std::sqrt(rho);
  QuadratureResult r;
  r.coarse = tensor_level(wh, R, opt.nodes, rho, slice);
  r.value = tensor_level(wh, R, 2 * opt.nodes, rho, slice);
  r.rel_change = std::abs(r.value - r.coarse) / std::max(std::abs(r.value), 1e-300);
  // Local wavenumber at three whitened standard deviations against the widest node gap, capped at 1e6.
  const double gap = opt.half_width * std::numbers::pi / (2.0 * opt.nodes);
  r.points_per_wavelength = std::min(1e6, kTwoPi / (3.0 * wh.re_norm * gap));
  if (r.rel_change > opt.tolerance) throw InteractionError("quadrature did not converge between refinement levels");
  return r;
}

}  // namespace

TripleBeams build_triple_beams(const MaterialModel& m, const CovectorTriple& tr, const TripleOptions& opt) {
  TripleBeams tb;
  tb.triple = tr;
  for (int k = 0; k < 3; ++k) {
    const std::size_t ks = static_cast<std::size_t>(k);
    const WaveMode mode = k == 1 ? WaveMode::P : WaveMode::S;
    TraceOptions to = opt.trace;
    if (k != 1) to.e2_hint = tr.alpha;
    auto geo = std::make_shared<const Geodesic>(trace_geodesic(m, mode, tr.x0, tr.xi[ks], to));
    auto chart = std::make_shared<FermiChart>(geo, 0.0, opt.chart);
    chart->build_cache(-opt.cache_half, opt.cache_half);
    tb.weight[ks] = kSqrt2 * beam_speed(tr, k) * tr.kappa[ks];
    BeamOptions bo;
    bo.pol = k == 1 ? Polarization::P : Polarization::SV;
    bo.alpha = 1;
    bo.delta = opt.delta;
    bo.kappa = tb.weight[ks];
    bo.conjugate = tb.weight[ks] < 0.0;
    tb.beam[ks] = std::make_shared<GaussianBeam>(chart, bo);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) tb.overlap_radius = std::max(tb.overlap_radius, pair_overlap(tb, i, j, opt.cache_half));
  }
  return tb;
}

TripleSample sample_triple(const TripleBeams& tb, double t, const Vector3d& x) {
  TripleSample out;
  std::array<Vector3d, 3> sy;
  std::array<Matrix3d, 3> jti;
  if (!invert_all(tb, x, sy, jti)) return out;
  const Moduli mod = moduli_at(tb.beam[0]->chart().medium(), x);
  out.inside = combine(tb, t - tb.triple.t, sy, jti, mod, out.S, out.F);
  return out;
}

cplx inverse_sqrt_det_minus_i(const Matrix4cd& Q) {
  const Matrix4cd M = cplx(0.0, -1.0) * Q;
  Eigen::ComplexEigenSolver<Matrix4cd> es(M, false);
  if (es.info() != Eigen::Success) throw InteractionError("eigenvalue solver failed for the phase Hessian");
  cplx r = 1.0;
  for (int i = 0; i < 4; ++i) r /= std::sqrt(es.eigenvalues()[i]);
  return r;
}

StationaryPhase stationary_phase_prediction(const TripleBeams& tb) {
  const CovectorTriple& tr = tb.triple;
  StationaryPhase sp;
  sp.Q.setZero();
  for (std::size_t k = 0; k < 3; ++k) {
    const Matrix4cd H = tb.beam[k]->ambient_hessian(0.0);
    sp.Q += tb.weight[k] * (tb.beam[k]->options().conjugate ? Matrix4cd(H.conjugate()) : H);
  }
  sp.Q = 0.5 * (sp.Q + sp.Q.transpose()).eval();
  sp.det_factor = inverse_sqrt_det_minus_i(sp.Q);

  std::array<Vector3d, 3> sy;
  std::array<Matrix3d, 3> jti;
  std::array<BeamSample, 3> bs;
  const Moduli mod = moduli_at(tb.beam[0]->chart().medium(), tr.x0);
  cplx S;
  if (!invert_all(tb, tr.x0, sy, jti) || !combine(tb, 0.0, sy, jti, mod, S, sp.F_p, &bs)) {
    throw InteractionError("interaction point is not covered by all three beams");
  }
  sp.W_p = 1.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const Vector3d pol = k == 1 ? tr.xi[1] : tr.alpha;
    sp.W_p *= bs[k].amp.dot(pol.cast<cplx>()) * bs[k].grad_x.dot(tr.xi[k].cast<cplx>());
  }
  sp.symbol = leading_symbol(mod, tr);
  sp.prediction = kTwoPi * kTwoPi * sp.det_factor * sp.F_p;
  return sp;
}

QuadratureResult oscillatory_integral(const TripleBeams& tb, const Matrix4cd& Q, double rho,
                                      const QuadratureOptions& opt) {
  const MaterialModel& m = tb.beam[0]->chart().medium();
  auto slice = [&](const Vector3d& dx, const std::vector<double>& t, const std::vector<double>& w, double r) -> cplx {
    const Vector3d x = tb.triple.x0 + dx;
    std::array<Vector3d, 3> sy;
    std::array<Matrix3d, 3> jti;
    if (!invert_all(tb, x, sy, jti)) return 0.0;
    const Moduli mod = moduli_at(m, x);
    const std::size_t n = t.size();
    std::vector<double> ww(n, 0.0), sr(n, 0.0), si(n, 0.0), fr(n, 0.0), fi(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      cplx S, F;
      if (!combine(tb, t[j], sy, jti, mod, S, F) || F == 0.0) continue;
      ww[j] = w[j];
      sr[j] = S.real();
      si[j] = S.imag();
      fr[j] = F.real();
      fi[j] = F.imag();
    }
    return simd::oscillatory_sum({ww.data(), sr.data(), si.data(), fr.data(), fi.data(), n}, r);
  };
  return two_levels(Q, rho, opt, slice);
}

QuadratureResult gaussian_model_integral(const Matrix4cd& Q, double rho, const QuadratureOptions& opt) {
  auto slice = [&](const Vector3d& dx, const std::vector<double>& t, const std::vector<double>& w, double r) -> cplx {
    const std::size_t n = t.size();
    std::vector<double> sr(n), si(n), fr(n, 1.0), fi(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::Vector4cd y(t[j], dx[0], dx[1], dx[2]);
      const cplx S = 0.5 * y.cwiseProduct(Q * y).sum();
      sr[j] = S.real();
      si[j] = S.imag();
    }
    return simd::oscillatory_sum({w.data(), sr.data(), si.data(), fr.data(), fi.data(), n}, r);
  };
  return two_levels(Q, rho, opt, slice);
}

SumPhaseDiagnostics sum_phase_diagnostics(const TripleBeams& tb, int samples, double radius, unsigned seed) {
  const CovectorTriple& tr = tb.triple;
  SumPhaseDiagnostics d;
  const TripleSample p = sample_triple(tb, tr.t, tr.x0);
  if (!p.inside) throw InteractionError("interaction point is not covered by all three beams");
  d.S_p = std::abs(p.S);
  const double h = 1e-4;
  Eigen::Vector4cd g;
  for (int i = 0; i < 4; ++i) {
    Vector4d e = Vector4d::Zero();
    e[i] = h;
    const TripleSample a = sample_triple(tb, tr.t + e[0], tr.x0 + e.tail<3>());
    const TripleSample b = sample_triple(tb, tr.t - e[0], tr.x0 - e.tail<3>());
    g[i] = (a.S - b.S) / (2.0 * h);
  }
  d.grad_S_p = g.norm();
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  d.min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Vector4d y(nd(rng), nd(rng), nd(rng), nd(rng));
    y *= radius * std::pow(ud(rng), 0.25) / y.norm();
    const TripleSample s = sample_triple(tb, tr.t + y[0], tr.x0 + y.tail<3>());
    if (!s.inside || y.norm() == 0.0) continue;
    d.min_ratio = std::min(d.min_ratio, s.S.imag() / y.squaredNorm());
    ++d.samples;
  }
  return d;
}

namespace {

nlohmann::json cjson(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

nlohmann::json InteractionMeasurement::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < rho.size(); ++i) {
    rows.push_back({{"rho", rho[i]}, {"value", cjson(value[i])}, {"coarse", cjson(coarse[i])}, {"rel_error", rel_error[i]}});
  }
  return {{"triple", triple.to_json()},
          {"measurements", rows},
          {"prediction", cjson(sp.prediction)},
          {"det_factor", cjson(sp.det_factor)},
          {"F_p", cjson(sp.F_p)},
          {"W_p", cjson(sp.W_p)},
          {"symbol", cjson(sp.symbol)},
          {"extrapolated", cjson(extrapolated)},
          {"symbol_estimate", cjson(symbol_estimate)},
          {"remainder_slope", remainder_slope},
          {"overlap_radius", overlap_radius},
          {"phase", {{"S_p", diag.S_p}, {"grad_S_p", diag.grad_S_p}, {"min_ratio", diag.min_ratio}, {"samples", diag.samples}}}};
}

InteractionMeasurement measure_interaction(const MaterialModel& m, const CovectorTriple& tr,
                                           const std::vector<double>& rhos, const TripleOptions& topt,
                                           const QuadratureOptions& qopt, unsigned seed) {
  if (rhos.empty()) throw InteractionError("no frequency parameters given");
  InteractionMeasurement out;
  out.triple = tr;
  const TripleBeams tb = build_triple_beams(m, tr, topt);
  out.overlap_radius = tb.overlap_radius;
  out.sp = stationary_phase_prediction(tb);
  out.rho = rhos;
  std::sort(out.rho.begin(), out.rho.end());
  std::vector<double> resid;
  for (double r : out.rho) {
    const QuadratureResult q = oscillatory_integral(tb, out.sp.Q, r, qopt);
    out.value.push_back(q.value);
    out.coarse.push_back(q.coarse);
    const double e = std::abs(q.value - out.sp.prediction);
    out.rel_error.push_back(e / std::abs(out.sp.prediction));
    resid.push_back(std::max(e, 1e-300));
  }
  const std::size_t n = out.rho.size();
  if (n >= 2) {
    const double ra = out.rho[n - 2], rb = out.rho[n - 1];
    out.extrapolated = (rb * out.value[n - 1] - ra * out.value[n - 2]) / (rb - ra);
  } else {
    out.extrapolated = out.value.back();
  }
  out.symbol_estimate = out.extrapolated / (kTwoPi * kTwoPi * out.sp.det_factor * out.sp.W_p);
  out.remainder_slope = loglog_slope(out.rho, resid);
  out.diag = sum_phase_diagnostics(tb, 1000, 0.1, seed);
  return out;
}

}  // namespace elastobeam
