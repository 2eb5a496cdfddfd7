#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "elastobeam/beam.hpp"

namespace elastobeam {

namespace {

struct YZ {
  Matrix3cd Y, Z;
};

YZ rhs(const FermiChart& chart, double tau, const YZ& s) {
  const Matrix3cd C = FermiChart::C().cast<cplx>();
  return {C * s.Z, -chart.D(tau).cast<cplx>() * s.Y};
}

YZ rk4(const FermiChart& chart, double tau, const YZ& s, double h) {
  const YZ k1 = rhs(chart, tau, s);
  const YZ k2 = rhs(chart, tau + 0.5 * h, {s.Y + 0.5 * h * k1.Y, s.Z + 0.5 * h * k1.Z});
  const YZ k3 = rhs(chart, tau + 0.5 * h, {s.Y + 0.5 * h * k2.Y, s.Z + 0.5 * h * k2.Z});
  const YZ k4 = rhs(chart, tau + h, {s.Y + h * k3.Y, s.Z + h * k3.Z});
  return {s.Y + h / 6.0 * (k1.Y + 2.0 * k2.Y + 2.0 * k3.Y + k4.Y),
          s.Z + h / 6.0 * (k1.Z + 2.0 * k2.Z + 2.0 * k3.Z + k4.Z)};
}

double condition(const Matrix3cd& y) {
  Eigen::JacobiSVD<Matrix3cd> svd(y);
  const auto& sv = svd.singularValues();
  return sv[2] > 0.0 ? sv[0] / sv[2] : INFINITY;
}

}  // namespace

RiccatiPath solve_riccati(const FermiChart& chart, const Matrix3cd& H0, const Matrix3cd& Y0, double tau_lo,
                          double tau_hi, double step) {
  if (!(step > 0.0)) throw GeometryError("Riccati step must be positive");
  if (tau_lo > 0.0 || tau_hi < 0.0) throw GeometryError("Riccati interval must contain tau = 0");
  if ((H0 - H0.transpose()).norm() > 1e-12 * (1.0 + H0.norm())) throw GeometryError("H0 is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H0.imag());
  if (es.eigenvalues().minCoeff() <= 0.0) throw GeometryError("Im H0 is not positive definite");
  if (condition(Y0) > 1e12) throw GeometryError("Y0 is singular");

  const long kl = static_cast<long>(std::floor(tau_lo / step + 1e-9));
  const long kh = static_cast<long>(std::ceil(tau_hi / step - 1e-9));
  const std::size_t n = static_cast<std::size_t>(kh - kl + 1);
  const std::size_t c = static_cast<std::size_t>(-kl);

  RiccatiPath p;
  p.h_ = step;
  p.tau0_ = double(kl) * step;
  p.centre_ = c;
  p.Y_.resize(n);
  p.Z_.resize(n);
  p.H_.resize(n);
  p.Hdot_.resize(n);
  p.sq_.resize(n);
  p.sqdot_.resize(n);

  const Matrix3cd C = FermiChart::C().cast<cplx>();
  auto store = [&](std::size_t k, const YZ& s, cplx prev) {
    if (!s.Y.allFinite() || !s.Z.allFinite()) throw GeometryError("Riccati integration produced a non-finite state");
    if (condition(s.Y) > 1e12) throw GeometryError("Y is singular along the beam (condition number above 1e12)");
    p.Y_[k] = s.Y;
    p.Z_[k] = s.Z;
    Matrix3cd h = s.Z * s.Y.inverse();
    h = 0.5 * (h + h.transpose()).eval();
    p.H_[k] = h;
    p.Hdot_[k] = -h * C * h - chart.D(p.tau_at(k)).cast<cplx>();
    cplx q = std::sqrt(s.Y.determinant());
    if (std::abs(q + prev) < std::abs(q - prev)) q = -q;
    p.sq_[k] = q;
    p.sqdot_[k] = 0.5 * q * (C * h).trace();
  };

  const YZ s0{Y0, H0 * Y0};
  store(c, s0, std::sqrt(Y0.determinant()));
  YZ s = s0;
  for (std::size_t k = c + 1; k < n; ++k) {
    s = rk4(chart, p.tau_at(k - 1), s, step);
    store(k, s, p.sq_[k - 1]);
  }
  s = s0;
  for (std::size_t k = c; k-- > 0;) {
    s = rk4(chart, p.tau_at(k + 1), s, -step);
    store(k, s, p.sq_[k + 1]);
  }
  return p;
}

std::size_t RiccatiPath::locate(double tau, double& f) const {
  const double u = (tau - tau0_) / h_;
  const double last = double(Y_.size() - 1);
  if (u < -1e-9 || u > last + 1e-9) throw GeometryError("tau outside the Riccati interval");
  const std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, last - 1.0));
  f = u - double(k);
  return k;
}

namespace {

template <class T>
T hermite(const T& a, const T& da, const T& b, const T& db, double f, double h) {
  const double f2 = f * f, f3 = f2 * f;
  return (2 * f3 - 3 * f2 + 1) * a + (f3 - 2 * f2 + f) * h * da + (-2 * f3 + 3 * f2) * b + (f3 - f2) * h * db;
}

template <class T>
T hermite_d(const T& a, const T& da, const T& b, const T& db, double f, double h) {
  const double f2 = f * f;
  return ((6 * f2 - 6 * f) / h) * a + (3 * f2 - 4 * f + 1) * da + ((-6 * f2 + 6 * f) / h) * b + (3 * f2 - 2 * f) * db;
}

}  // namespace

Matrix3cd RiccatiPath::H_at(double tau) const {
  double f;
  const std::size_t k = locate(tau, f);
  if (f == 0.0) return H_[k];
  return hermite<Matrix3cd>(H_[k], Hdot_[k], H_[k + 1], Hdot_[k + 1], f, h_);
}

Matrix3cd RiccatiPath::H_dot_at(double tau) const {
  double f;
  const std::size_t k = locate(tau, f);
  return hermite_d<Matrix3cd>(H_[k], Hdot_[k], H_[k + 1], Hdot_[k + 1], f, h_);
}

cplx RiccatiPath::sqrt_det_Y_at(double tau) const {
  double f;
  const std::size_t k = locate(tau, f);
  if (f == 0.0) return sq_[k];
  return hermite<cplx>(sq_[k], sqdot_[k], sq_[k + 1], sqdot_[k + 1], f, h_);
}

double RiccatiPath::invariant(std::size_t k) const {
  return H_.at(k).imag().determinant() * std::norm(Y_.at(k).determinant());
}

double RiccatiPath::invariant_drift() const {
  const double ref = invariant(centre_);
  double worst = 0.0;
  for (std::size_t k = 0; k < Y_.size(); ++k) worst = std::max(worst, std::abs(invariant(k) / ref - 1.0));
  return worst;
}

double RiccatiPath::min_imag_eigenvalue() const {
  double lo = INFINITY;
  for (const auto& h : H_) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h.imag());
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

double RiccatiPath::max_asymmetry() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < Y_.size(); ++k) {
    const Matrix3cd h = Z_[k] * Y_[k].inverse();
    worst = std::max(worst, (h - h.transpose()).norm() / (1.0 + h.norm()));
  }
  return worst;
}

}  // namespace elastobeam
