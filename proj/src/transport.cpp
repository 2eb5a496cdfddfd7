#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "elastobeam/beam.hpp"

namespace elastobeam {

using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// Index 0 is t; 1..3 are the spatial chart coordinates (s, y2, y3).
using Grad4 = Eigen::Matrix<cplx, 4, 1>;

}  // namespace

TransportResidual transport_residual(const GaussianBeam& beam, double tau, double eps) {
  const FermiChart& chart = beam.chart();
  const MaterialModel& m = chart.medium();
  const double s = tau / kSqrt2;
  const GeodesicState ax = chart.axis_state(s);
  Matrix3d J;
  J << ax.v, ax.e2, ax.e3;

  const double lam = m.lambda().eval(ax.x), mu = m.mu().eval(ax.x), rho = m.rho().eval(ax.x);
  const Vector3d dlam = J.transpose() * m.lambda().eval_grad(ax.x).grad;
  const Vector3d dmu = J.transpose() * m.mu().eval_grad(ax.x).grad;
  const double c = m.speed(chart.mode(), ax.x);
  const double ic2 = 1.0 / (c * c);
  const Christoffel G = chart.christoffel(Vector3d(s, 0.0, 0.0));

  // d z / d (t, s, y2, y3) on the axis.
  Eigen::Matrix<double, 3, 4> dz = Eigen::Matrix<double, 3, 4>::Zero();
  dz(0, 0) = -1.0 / kSqrt2;
  dz(0, 1) = 1.0 / kSqrt2;
  dz(1, 2) = 1.0;
  dz(2, 3) = 1.0;

  const Matrix3cd H = beam.riccati().H_at(tau);
  const Eigen::Matrix4cd d2phi = 2.0 * dz.transpose().cast<cplx>() * H * dz.cast<cplx>();
  Grad4 dphi;
  dphi << -1.0 / kSqrt2, 1.0 / kSqrt2, 0.0, 0.0;

  const double scale = 1.0 + eps * tau;
  const cplx A = beam.amplitude(tau) * scale;
  const cplx Ad = beam.amplitude_dot(tau) * scale + beam.amplitude(tau) * eps;
  Grad4 dA;
  dA << Ad / kSqrt2, Ad / kSqrt2, 0.0, 0.0;

  // Covariant amplitude components a_k and derivatives da(k, b) = d_b a_k.
  Vector3cd a;
  Eigen::Matrix<cplx, 3, 4> da;
  if (beam.options().pol == Polarization::P) {
    for (int k = 0; k < 3; ++k) {
      a[k] = A * dphi[k + 1];
      for (int b = 0; b < 4; ++b) da(k, b) = dA[b] * dphi[k + 1] + A * d2phi(k + 1, b);
    }
  } else {
    const int al = beam.options().alpha;
    Vector3cd e = Vector3cd::Zero();
    e[al] = 1.0;
    Eigen::Matrix<cplx, 3, 4> de = Eigen::Matrix<cplx, 3, 4>::Zero();
    for (int b = 0; b < 4; ++b) {
      cplx acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += H(k, al) * dz(k, b);
      de(0, b) = -2.0 * kSqrt2 * acc;
    }
    for (int k = 0; k < 3; ++k) {
      a[k] = A * e[k];
      for (int b = 0; b < 4; ++b) da(k, b) = dA[b] * e[k] + A * de(k, b);
    }
  }

  const Vector3cd ph = dphi.tail<3>();
  const Matrix3cd ph2 = d2phi.bottomRightCorner<3, 3>();
  const cplx phi_t = dphi[0], phi_tt = d2phi(0, 0);
  const cplx aphi = a.cwiseProduct(ph).sum();
  auto cov = [&](int k, int l) {  // a_{k;l}
    cplx v = da(k, l + 1);
    for (int n = 0; n < 3; ++n) v -= G[n](k, l) * a[n];
    return v;
  };
  cplx div = 0.0;
  for (int k = 0; k < 3; ++k) div += cov(k, k);

  const int i = beam.options().pol == Polarization::P ? 0 : beam.options().alpha;
  cplx r = rho * phi_tt * a[i] + 2.0 * rho * phi_t * da(i, 0);

  cplx t1 = dlam[i] * aphi;
  for (int k = 0; k < 3; ++k) t1 += lam * (da(k, i + 1) * ph[k] + a[k] * ph2(k, i));
  for (int j = 0; j < 3; ++j) {
    t1 += dmu[j] * (a[i] * ph[j] + a[j] * ph[i]);
    t1 += mu * (da(i, j + 1) * ph[j] + a[i] * ph2(j, j) + da(j, j + 1) * ph[i] + a[j] * ph2(i, j));
  }
  r -= ic2 * t1;

  cplx t2 = lam * div * ph[i];
  for (int j = 0; j < 3; ++j) t2 += mu * (cov(i, j) + cov(j, i)) * ph[j];
  r -= ic2 * t2;

  cplx t3 = 0.0;
  for (int n = 0; n < 3; ++n) {
    for (int j = 0; j < 3; ++j) {
      t3 += G[n](i, j) * (lam * aphi * (n == j ? 1.0 : 0.0) + mu * a[n] * ph[j] + mu * a[j] * ph[n]);
      t3 += G[n](j, j) * (lam * aphi * (n == i ? 1.0 : 0.0) + mu * a[n] * ph[i] + mu * a[i] * ph[n]);
    }
  }
  r += ic2 * t3;

  // Coefficient of the next-order amplitude b in component i.
  Vector3cd bc;
  const cplx p2 = ph.cwiseProduct(ph).sum();
  for (int k = 0; k < 3; ++k) {
    bc[k] = (k == i ? rho * phi_t * phi_t - ic2 * mu * p2 : cplx(0.0)) - ic2 * (lam + mu) * ph[k] * ph[i];
  }

  TransportResidual out;
  out.raw = r;
  out.value = std::abs(r);
  out.b_factor = bc.norm();
  return out;
}

cplx sv_frame_pairing(const GaussianBeam& beam, double tau, const Vector3d& z) {
  const int al = beam.options().alpha;
  const Eigen::Vector4cd g = beam.phase_gradient_fd(tau, z);
  const Vector3cd hz = beam.riccati().H_at(tau) * z.cast<cplx>();
  const cplx e1 = -2.0 * kSqrt2 * hz[al];
  return e1 * (g[0] + g[1]) / kSqrt2 + g[al + 1];
}

}  // namespace elastobeam
