#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>

#include "elastobeam/beam.hpp"

namespace elastobeam {

using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double smooth_step(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

}  // namespace

double cutoff(double t) {
  const double a = std::abs(t);
  if (a <= 0.25) return 1.0;
  if (a >= 0.5) return 0.0;
  const double u = (0.5 - a) / 0.25;
  const double p = smooth_step(u), q = smooth_step(1.0 - u);
  return p / (p + q);
}

GaussianBeam::GaussianBeam(std::shared_ptr<FermiChart> chart, BeamOptions opt) : chart_(std::move(chart)), opt_(opt) {
  if (!chart_) throw GeometryError("beam needs a chart");
  if (opt_.pol == Polarization::P && chart_->mode() != WaveMode::P) throw GeometryError("P beam needs a P chart");
  if (opt_.pol == Polarization::SV && chart_->mode() != WaveMode::S) throw GeometryError("SV beam needs an S chart");
  if (opt_.alpha != 1 && opt_.alpha != 2) throw GeometryError("SV direction must be 1 or 2");
  if (!(opt_.delta > 0.0)) throw GeometryError("cutoff width must be positive");
  opt_.delta = std::min(opt_.delta, 2.0 * chart_->options().tube_radius);
  const double pad = 0.1;
  const double lo_lim = chart_->tau_first(), hi_lim = chart_->tau_last();
  if (opt_.tau_lo == 0.0 && opt_.tau_hi == 0.0) {
    opt_.tau_lo = chart_->tau_minus() - pad;
    opt_.tau_hi = chart_->tau_plus() + pad;
  }
  opt_.tau_lo = std::clamp(opt_.tau_lo, lo_lim, 0.0);
  opt_.tau_hi = std::clamp(opt_.tau_hi, 0.0, hi_lim);
  chart_->prepare_axis(opt_.tau_lo - 0.05, opt_.tau_hi + 0.05);
  path_ = solve_riccati(*chart_, opt_.H0, opt_.Y0, opt_.tau_lo, opt_.tau_hi, opt_.step);
  const std::size_t n = path_.size();
  amp_.resize(n);
  amp_dot_.resize(n);
  for (std::size_t k = 0; k < n; ++k) amp_[k] = amplitude(path_.tau_at(k));
  const double h = path_.step();
  for (std::size_t k = 0; k < n; ++k) {
    if (k >= 2 && k + 2 < n) {
      amp_dot_[k] = (amp_[k - 2] - 8.0 * amp_[k - 1] + 8.0 * amp_[k + 1] - amp_[k + 2]) / (12.0 * h);
    } else {
      amp_dot_[k] = amplitude_dot(path_.tau_at(k));
    }
  }
}

cplx GaussianBeam::amplitude_table(double tau) const {
  const double u = (tau - path_.tau_first()) / path_.step();
  const double last = double(amp_.size() - 1);
  const std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, last - 1.0));
  const double f = u - double(k), f2 = f * f, f3 = f2 * f, h = path_.step();
  return (2 * f3 - 3 * f2 + 1) * amp_[k] + (f3 - 2 * f2 + f) * h * amp_dot_[k] + (-2 * f3 + 3 * f2) * amp_[k + 1] +
         (f3 - f2) * h * amp_dot_[k + 1];
}

cplx GaussianBeam::amplitude(double tau) const {
  const cplx q = path_.sqrt_det_Y_at(tau);
  const Vector3d x = chart_->axis_state(tau / kSqrt2).x;
  const MaterialModel& m = chart_->medium();
  return 1.0 / (q * std::sqrt(m.speed(mode(), x) * m.rho().eval(x)));
}

cplx GaussianBeam::amplitude_dot(double tau) const {
  const double h = path_.step();
  const double lo = path_.tau_first(), hi = path_.tau_last();
  if (tau - 2 * h >= lo && tau + 2 * h <= hi) {
    return (-amplitude(tau + 2 * h) + 8.0 * amplitude(tau + h) - 8.0 * amplitude(tau - h) + amplitude(tau - 2 * h)) /
           (12.0 * h);
  }
  const double s = tau - 2 * h < lo ? 1.0 : -1.0;
  return s * (-3.0 * amplitude(tau + 4 * s * h) + 16.0 * amplitude(tau + 3 * s * h) - 36.0 * amplitude(tau + 2 * s * h) +
              48.0 * amplitude(tau + s * h) - 25.0 * amplitude(tau)) /
         (12.0 * h);
}

double GaussianBeam::log_conservation_residual(double tau) const {
  const MaterialModel& m = chart_->medium();
  auto f = [&](double t) {
    const Vector3d x = chart_->axis_state(t / kSqrt2).x;
    const cplx q = path_.sqrt_det_Y_at(t);
    const cplx a = amplitude(t);
    return std::log(a * a * q * q * m.modulus(mode(), x) / m.speed(mode(), x));
  };
  const double h = 1e-3;
  const cplx d = (f(tau - 2 * h) - 8.0 * f(tau - h) + 8.0 * f(tau + h) - f(tau + 2 * h)) / (12.0 * h);
  return std::abs(d);
}

cplx GaussianBeam::phase(double tau, const Vector3d& z) const {
  const Vector3cd zc = z.cast<cplx>();
  return z[0] + zc.dot(path_.H_at(tau) * zc);
}

Eigen::Vector4cd GaussianBeam::phase_gradient_fd(double tau, const Vector3d& z) const {
  const double h = path_.step();
  const Matrix3cd hd = (-path_.H_at(tau + 2 * h) + 8.0 * path_.H_at(tau + h) - 8.0 * path_.H_at(tau - h) +
                        path_.H_at(tau - 2 * h)) /
                       (12.0 * h);
  const Vector3cd zc = z.cast<cplx>();
  const Vector3cd hz = path_.H_at(tau) * zc;
  Eigen::Vector4cd g;
  g[0] = zc.transpose() * hd * zc;
  g[1] = 1.0 + 2.0 * hz[0];
  g[2] = 2.0 * hz[1];
  g[3] = 2.0 * hz[2];
  return g;
}

bool GaussianBeam::sample(double t, const Vector3d& x, BeamSample& out) const {
  Vector3d sy;
  Matrix3d J;
  if (!chart_->invert(x, sy, &J)) return false;
  return sample_at(t, sy, J.transpose().inverse(), out);
}

bool GaussianBeam::sample_at(double t, const Vector3d& sy, const Matrix3d& jac_inv_t, BeamSample& out) const {
  const double tp = t - chart_->t0();
  const double tau = (tp + sy[0]) / kSqrt2;
  if (tau < path_.tau_first() || tau > path_.tau_last()) return false;
  const Vector3d z((sy[0] - tp) / kSqrt2, sy[1], sy[2]);
  out.tau = tau;
  out.z = z;
  out.cutoff = cutoff(z.norm() / opt_.delta);
  const Matrix3cd H = path_.H_at(tau);
  const Matrix3cd Hd = path_.H_dot_at(tau);
  const Vector3cd zc = z.cast<cplx>();
  const Vector3cd hz = H * zc;
  out.phi = z[0] + zc.dot(hz);
  const cplx phi_tau = zc.transpose() * Hd * zc;
  const cplx phi_r = 1.0 + 2.0 * hz[0];
  out.phi_t = (phi_tau - phi_r) / kSqrt2;
  const Vector3cd dsy((phi_tau + phi_r) / kSqrt2, 2.0 * hz[1], 2.0 * hz[2]);
  const Eigen::Matrix3cd jti = jac_inv_t.cast<cplx>();
  out.grad_x = jti * dsy;
  const cplx A = amplitude_table(tau);
  if (opt_.pol == Polarization::P) {
    out.amp = A * out.grad_x;
  } else {
    const int a = opt_.alpha;
    Vector3cd e(-2.0 * kSqrt2 * hz[a], 0.0, 0.0);
    e[a] = 1.0;
    out.amp = A * (jti * e);
  }
  return true;
}

Vector3cd GaussianBeam::evaluate(double varrho, double t, const Vector3d& x) const {
  BeamSample s;
  if (!sample(t, x, s) || s.cutoff == 0.0) return Vector3cd::Zero();
  cplx phi = s.phi;
  Vector3cd a = s.amp;
  if (opt_.conjugate) {
    phi = std::conj(phi);
    a = a.conjugate().eval();
  }
  return s.cutoff * a * std::exp(cplx(0.0, varrho * opt_.kappa) * phi);
}

Eigen::Matrix4cd GaussianBeam::ambient_hessian(double s) const {
  const double tau = kSqrt2 * s;
  const GeodesicState st = chart_->axis_state(s);
  const GeodesicState d = geodesic_rhs(chart_->medium(), mode(), st);
  const SpeedSample sp = chart_->medium().wave_speed_grad(mode(), st.x);
  const Vector3d gl = sp.grad / sp.c;
  auto bilinear = [&](const Vector3d& u, const Vector3d& w) -> Vector3d {
    return gl.dot(u) * w + gl.dot(w) * u - u.dot(w) * gl;
  };
  const Vector3d* e[2] = {&st.e2, &st.e3};
  const Vector3d* de[2] = {&d.e2, &d.e3};
  // Second derivatives of the chart map x(s, y2, y3) on the axis, per coordinate pair.
  Vector3d T[3][3];
  T[0][0] = d.v;
  for (int a = 0; a < 2; ++a) {
    T[0][a + 1] = T[a + 1][0] = *de[a];
    for (int b = 0; b < 2; ++b) T[a + 1][b + 1] = bilinear(*e[a], *e[b]);
  }
  Matrix3d J;
  J << st.v, st.e2, st.e3;
  const Matrix3d Ji = J.inverse();
  // Hessian of the inverse-chart s-coordinate with respect to x.
  Matrix3d hs = Matrix3d::Zero();
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += Ji(0, i) * T[p][q][i];
      hs -= v * Ji.row(p).transpose() * Ji.row(q);
    }
  }
  Eigen::Matrix<double, 3, 4> dz = Eigen::Matrix<double, 3, 4>::Zero();
  dz(0, 0) = -1.0 / kSqrt2;
  dz(0, 1) = 1.0 / kSqrt2;
  dz(1, 2) = 1.0;
  dz(2, 3) = 1.0;
  const Eigen::Matrix4cd phi_ww = 2.0 * dz.transpose().cast<cplx>() * path_.H_at(tau) * dz.cast<cplx>();
  Eigen::Matrix4d W = Eigen::Matrix4d::Zero();
  W(0, 0) = 1.0;
  W.bottomRightCorner<3, 3>() = Ji;
  Eigen::Matrix4cd out = W.transpose().cast<cplx>() * phi_ww * W.cast<cplx>();
  out.bottomRightCorner<3, 3>() += (hs / kSqrt2).cast<cplx>();
  return out;
}

cplx GaussianBeam::eikonal_residual(double tau, const Vector3d& z) const {
  const Eigen::Vector4cd g = phase_gradient_fd(tau, z);
  const Eigen::Matrix4cd G = chart_->lorentz_inverse_metric(tau, z).cast<cplx>();
  const Vector3d x = chart_->forward((tau + z[0]) / kSqrt2, z[1], z[2]);
  const cplx q = g.transpose() * G * g;
  return chart_->medium().rho().eval(x) * q;
}

void GaussianBeam::write_csv(std::ostream& out, std::size_t stride) const {
  out << "tau";
  const char* names[6] = {"H11", "H12", "H13", "H22", "H23", "H33"};
  for (const char* n : names) out << ',' << n << "_re," << n << "_im";
  out << ",detY_re,detY_im,A_re,A_im,invariant\n";
  out.precision(12);
  const int ij[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t k = 0; k < path_.size(); k += stride) {
    const double tau = path_.tau_at(k);
    out << tau;
    for (const auto& p : ij) out << ',' << path_.H(k)(p[0], p[1]).real() << ',' << path_.H(k)(p[0], p[1]).imag();
    const cplx d = path_.Y(k).determinant();
    const cplx A = amplitude(tau);
    out << ',' << d.real() << ',' << d.imag() << ',' << A.real() << ',' << A.imag() << ',' << path_.invariant(k)
        << '\n';
  }
}

}  // namespace elastobeam
