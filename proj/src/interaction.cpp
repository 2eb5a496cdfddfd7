#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "elastobeam/interaction.hpp"

namespace elastobeam {

using Eigen::Vector3d;
using Eigen::Vector4d;

Vector4d CovectorTriple::zeta(int k) const {
  Vector4d z;
  z << (k == 1 ? cP : cS), xi[static_cast<std::size_t>(k)];
  return z;
}

double CovectorTriple::cone_residual() const {
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vector4d z = zeta(k);
    const double c = k == 1 ? cP : cS;
    worst = std::max(worst, std::abs(z[0] * z[0] - c * c * z.tail<3>().squaredNorm()));
  }
  return worst;
}

double CovectorTriple::dependence_residual() const {
  return (kappa[0] * zeta(0) + kappa[1] * zeta(1) + kappa[2] * zeta(2)).cwiseAbs().maxCoeff();
}

double CovectorTriple::independence_angle() const {
  const Vector4d a = zeta(0), b = zeta(2);
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}

nlohmann::json CovectorTriple::to_json() const {
  auto vec = [](const Vector3d& v) { return nlohmann::json::array({v[0], v[1], v[2]}); };
  return {{"x0", vec(x0)},         {"t", t},
          {"cP", cP},              {"cS", cS},
          {"xi0", vec(xi[0])},     {"xi1", vec(xi[1])},
          {"xi2", vec(xi[2])},     {"kappa", {kappa[0], kappa[1], kappa[2]}},
          {"b", b},                {"alpha", vec(alpha)},
          {"cone_residual", cone_residual()}, {"dependence_residual", dependence_residual()}};
}

CovectorTriple select_covectors(const MaterialModel& m, const Vector3d& x0, const Vector3d& xi1, const Vector3d& xi2) {
  if (!m.box().contains_inner(x0)) throw InteractionError("interaction point outside the physical domain");
  if (std::abs(xi1.norm() - 1.0) > 1e-9 || std::abs(xi2.norm() - 1.0) > 1e-9) {
    throw InteractionError("covectors must have unit length");
  }
  const Vector3d n = xi1.cross(xi2);
  if (n.norm() < 1e-8) throw InteractionError("covectors are parallel");

  CovectorTriple tr;
  tr.x0 = x0;
  tr.cP = m.speed(WaveMode::P, x0);
  tr.cS = m.speed(WaveMode::S, x0);
  const double d12 = xi1.dot(xi2);
  const double den = 2.0 * tr.cS * (tr.cP - tr.cS * d12);
  if (std::abs(den) < 1e-12) throw InteractionError("degenerate cone equation");
  tr.b = (tr.cS * tr.cS - tr.cP * tr.cP) / den;
  const double s = (tr.cP + tr.b * tr.cS) / tr.cS;
  tr.xi[1] = xi1;
  tr.xi[2] = xi2;
  tr.xi[0] = (xi1 + tr.b * xi2) / s;
  tr.kappa = {-s, 1.0, tr.b};

  tr.alpha = n.normalized();
  int lead = 2;
  while (lead > 0 && std::abs(tr.alpha[lead]) < 1e-14) --lead;
  if (tr.alpha[lead] < 0.0) tr.alpha = -tr.alpha;

  const double scale = 1.0 + tr.cP * tr.cP;
  if (tr.cone_residual() > 1e-10 * scale || tr.dependence_residual() > 1e-10 * scale) {
    throw InteractionError("covector triple failed its cone or dependence check");
  }
  if (tr.independence_angle() < 1e-3) throw InteractionError("S covectors are nearly dependent");
  return tr;
}

Moduli moduli_at(const MaterialModel& m, const Vector3d& x) {
  return {m.lambda().eval(x), m.mu().eval(x), m.A().eval(x), m.B().eval(x), m.C().eval(x)};
}

namespace {

cplx ddot(const Matrix3cd& a, const Matrix3cd& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

cplx interaction_integrand(const Moduli& k, const Matrix3cd& U1, const Matrix3cd& U2, const Matrix3cd& V) {
  const cplx d1 = U1.trace(), d2 = U2.trace(), dv = V.trace();
  const Matrix3cd Vt = V.transpose();
  cplx g = (k.lambda + k.B) * ddot(U1, U2) * dv;
  g += 2.0 * k.C * d1 * d2 * dv;
  g += k.B * ddot(U1, U2.transpose()) * dv;
  g += k.B * (d1 * ddot(U2, Vt) + d2 * ddot(U1, Vt));
  g += 0.25 * k.A * ((U1 * U2 * V).trace() + (U2 * U1 * V).trace());
  g += (k.lambda + k.B) * (d1 * ddot(U2, V) + d2 * ddot(U1, V));
  const Matrix3cd sym = U1.transpose() * U2 + U2.transpose() * U1 + U1 * U2.transpose() + U2 * U1.transpose() +
                        U1 * U2 + U2 * U1;
  g += (k.mu + 0.25 * k.A) * ddot(sym, V);
  return g;
}

cplx interaction_integrand_loops(const Moduli& k, const Matrix3cd& U1, const Matrix3cd& U2, const Matrix3cd& V) {
  // d u_i / d x_j = U(i, j)
  auto du1 = [&](int i, int j) { return U1(i, j); };
  auto du2 = [&](int i, int j) { return U2(i, j); };
  auto dv = [&](int i, int j) { return V(i, j); };
  cplx div1 = 0.0, div2 = 0.0, divv = 0.0;
  for (int m = 0; m < 3; ++m) {
    div1 += du1(m, m);
    div2 += du2(m, m);
    divv += dv(m, m);
  }
  cplx g = 0.0;
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 3; ++n) {
      g += (k.lambda + k.B) * du1(m, n) * du2(m, n) * divv;
      g += k.B * du1(m, n) * du2(n, m) * divv;
      g += k.B * (div1 * du2(m, n) * dv(n, m) + div2 * du1(m, n) * dv(n, m));
    }
  }
  g += 2.0 * k.C * div1 * div2 * divv;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      cplx a4 = 0.0, mu4 = 0.0;
      for (int m = 0; m < 3; ++m) {
        a4 += du1(j, m) * du2(m, i) + du2(j, m) * du1(m, i);
        mu4 += du1(m, i) * du2(m, j) + du2(m, i) * du1(m, j) + du1(i, m) * du2(j, m) + du2(i, m) * du1(j, m) +
               du1(i, m) * du2(m, j) + du2(i, m) * du1(m, j);
      }
      g += 0.25 * k.A * a4 * dv(i, j);
      g += (k.lambda + k.B) * (div1 * du2(i, j) + div2 * du1(i, j)) * dv(i, j);
      g += (k.mu + 0.25 * k.A) * mu4 * dv(i, j);
    }
  }
  return g;
}

cplx leading_symbol(const Moduli& k, const CovectorTriple& tr, const Vector3d& alpha) {
  if (std::abs(alpha.norm() - 1.0) > 1e-9 || std::abs(alpha.dot(tr.xi[1])) > 1e-9 ||
      std::abs(alpha.dot(tr.xi[2])) > 1e-9) {
    throw InteractionError("SV polarization must be a unit normal to the P and S covectors");
  }
  const Matrix3cd U1 = (tr.xi[1] * tr.xi[1].transpose()).cast<cplx>();
  const Matrix3cd U2 = (alpha * tr.xi[2].transpose()).cast<cplx>();
  const Matrix3cd V = (alpha * tr.xi[0].transpose()).cast<cplx>();
  return interaction_integrand(k, U1, U2, V);
}

double two_term_symbol(const Moduli& k, const CovectorTriple& tr) {
  return (k.lambda + k.B) * tr.xi[2].dot(tr.xi[0]) +
         (2.0 * k.mu + 0.5 * k.A) * tr.xi[1].dot(tr.xi[2]) * tr.xi[1].dot(tr.xi[0]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace elastobeam
