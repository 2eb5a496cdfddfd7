#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "elastobeam/geometry.hpp"
#include "elastobeam/parallel.hpp"

namespace elastobeam {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector3d;

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// Geodesic shooting for the exponential map: only position and velocity.
Vector3d shoot(const MaterialModel& m, WaveMode mode, Vector3d x, Vector3d v, int steps) {
  auto acc = [&](const Vector3d& p, const Vector3d& u) -> Vector3d {
    const SpeedSample sp = m.wave_speed_grad(mode, p);
    const Vector3d gl = sp.grad / sp.c;
    return 2.0 * gl.dot(u) * u - u.squaredNorm() * gl;
  };
  const double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const Vector3d a1 = acc(x, v);
    const Vector3d x2 = x + 0.5 * h * v, v2 = v + 0.5 * h * a1;
    const Vector3d a2 = acc(x2, v2);
    const Vector3d x3 = x + 0.5 * h * v2, v3 = v + 0.5 * h * a2;
    const Vector3d a3 = acc(x3, v3);
    const Vector3d x4 = x + h * v3, v4 = v + h * a3;
    const Vector3d a4 = acc(x4, v4);
    x += h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
    v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  }
  return x;
}

// Hessian of f at 0 restricted to the listed coordinates, Richardson-extrapolated.
template <class F>
Matrix3d fd_hessian(const F& f, double h, std::initializer_list<int> idx) {
  auto at = [&](double hh) {
    Matrix3d out = Matrix3d::Zero();
    const double f0 = f(Vector3d::Zero());
    for (int i : idx) {
      for (int j : idx) {
        if (j < i) continue;
        const Vector3d ei = hh * Vector3d::Unit(i), ej = hh * Vector3d::Unit(j);
        double v;
        if (i == j) {
          v = (f(ei) - 2.0 * f0 + f(-ei)) / (hh * hh);
        } else {
          v = (f(ei + ej) - f(ei - ej) - f(ej - ei) + f(-ei - ej)) / (4.0 * hh * hh);
        }
        out(i, j) = out(j, i) = v;
      }
    }
    return out;
  };
  return (4.0 * at(0.5 * h) - at(h)) / 3.0;
}

struct CatmullRom {
  double w[4], dw[4];
  explicit CatmullRom(double f) {
    const double f2 = f * f, f3 = f2 * f;
    w[0] = 0.5 * (-f3 + 2.0 * f2 - f);
    w[1] = 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0);
    w[2] = 0.5 * (-3.0 * f3 + 4.0 * f2 + f);
    w[3] = 0.5 * (f3 - f2);
    dw[0] = 0.5 * (-3.0 * f2 + 4.0 * f - 1.0);
    dw[1] = 0.5 * (9.0 * f2 - 10.0 * f);
    dw[2] = 0.5 * (-9.0 * f2 + 8.0 * f + 1.0);
    dw[3] = 0.5 * (3.0 * f2 - 2.0 * f);
  }
};

// Lagrange weights on nodes -1, 0, 1, 2 at fractional position f.
void lagrange4(double f, double w[4]) {
  w[0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
  w[1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
  w[2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
  w[3] = (f + 1.0) * f * (f - 1.0) / 6.0;
}

}  // namespace

FermiChart::FermiChart(std::shared_ptr<const Geodesic> geo, double t0, ChartOptions opt)
    : geo_(std::move(geo)), t0_(t0), opt_(opt) {
  if (!geo_) throw GeometryError("chart needs a geodesic");
  if (t0 < geo_->t_first() || t0 > geo_->t_last()) throw GeometryError("chart centre outside the geodesic");
  flat_ = medium().homogeneous_fields();
  substeps_ = opt_.exp_substeps > 0 ? opt_.exp_substeps : (flat_ ? 1 : 6);
}

double FermiChart::tau_first() const noexcept { return kSqrt2 * (geo_->t_first() - t0_); }
double FermiChart::tau_last() const noexcept { return kSqrt2 * (geo_->t_last() - t0_); }
double FermiChart::tau_minus() const noexcept { return kSqrt2 * (geo_->t_minus() - t0_); }
double FermiChart::tau_plus() const noexcept { return kSqrt2 * (geo_->t_plus() - t0_); }

Matrix3d FermiChart::C() noexcept { return Eigen::Vector3d(0.0, 2.0, 2.0).asDiagonal(); }

GeodesicState FermiChart::axis_state(double s) const { return geo_->at(t0_ + s); }

Vector3d FermiChart::forward(double s, double y2, double y3) const {
  const GeodesicState b = axis_state(s);
  if (y2 == 0.0 && y3 == 0.0) return b.x;
  return shoot(medium(), mode(), b.x, y2 * b.e2 + y3 * b.e3, substeps_);
}

Matrix3d FermiChart::jacobian(const Vector3d& sy, double step) const {
  const double h = step > 0.0 ? step : opt_.jac_step;
  auto diff = [&](double hh) {
    Matrix3d j;
    for (int k = 0; k < 3; ++k) {
      const Vector3d e = hh * Vector3d::Unit(k);
      j.col(k) = (forward(sy + e) - forward(sy - e)) / (2.0 * hh);
    }
    return j;
  };
  return (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
}

Matrix3d FermiChart::inverse_metric_y(const Vector3d& sy, double step) const {
  const Matrix3d j = jacobian(sy, step);
  const double c = medium().speed(mode(), forward(sy));
  return c * c * (j.transpose() * j).inverse();
}

double FermiChart::inv_gss(double s, double y2, double y3, double step) const {
  return inverse_metric_y(Vector3d(s, y2, y3), step)(0, 0);
}

Matrix4d FermiChart::lorentz_inverse_metric(double tau, const Vector3d& z) const {
  const double s = (tau + z[0]) / kSqrt2;
  const Matrix3d g = inverse_metric_y(Vector3d(s, z[1], z[2]));
  Matrix4d out;
  out(0, 0) = out(1, 1) = 0.5 * (g(0, 0) - 1.0);
  out(0, 1) = out(1, 0) = 0.5 * (g(0, 0) + 1.0);
  for (int a = 1; a < 3; ++a) {
    out(0, a + 1) = out(a + 1, 0) = out(1, a + 1) = out(a + 1, 1) = g(0, a) / kSqrt2;
    for (int b = 1; b < 3; ++b) out(a + 1, b + 1) = g(a, b);
  }
  return out;
}

Christoffel FermiChart::christoffel(const Vector3d& sy) const {
  if (sy.tail<2>().norm() > opt_.tube_radius) throw GeometryError("point outside the chart tube");
  const Matrix3d j = jacobian(sy);
  const SpeedSample sp = medium().wave_speed_grad(mode(), forward(sy));
  const Vector3d dl = j.transpose() * sp.grad / sp.c;  // d ln c / d y^i
  const Matrix3d ge = j.transpose() * j;
  const Vector3d up = ge.inverse() * dl;
  Christoffel g;
  for (int k = 0; k < 3; ++k) {
    g[k] = -up[k] * ge;
    for (int i = 0; i < 3; ++i) {
      g[k](k, i) += dl[i];
      g[k](i, k) += dl[i];
    }
  }
  return g;
}

Christoffel FermiChart::christoffel_fd(const Vector3d& sy) const {
  const double h = opt_.metric_step;
  auto metric = [&](const Vector3d& p) {
    const Matrix3d j = jacobian(p);
    return Matrix3d(j.transpose() * j);
  };
  std::array<Matrix3d, 3> dg;
  for (int l = 0; l < 3; ++l) {
    auto d = [&](double hh) {
      const Vector3d e = hh * Vector3d::Unit(l);
      return Matrix3d((metric(sy + e) - metric(sy - e)) / (2.0 * hh));
    };
    dg[l] = (4.0 * d(0.5 * h) - d(h)) / 3.0;
  }
  const Matrix3d inv = metric(sy).inverse();
  Christoffel g;
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i) {
      for (int jj = 0; jj < 3; ++jj) {
        double acc = 0.0;
        for (int l = 0; l < 3; ++l) acc += inv(k, l) * (dg[i](jj, l) + dg[jj](i, l) - dg[l](i, jj));
        g[k](i, jj) = 0.5 * acc;
      }
    }
  }
  return g;
}

Matrix3d FermiChart::D_fd(double tau, double jac_step, double metric_step) const {
  const double hj = jac_step > 0.0 ? jac_step : opt_.jac_step;
  const double hm = metric_step > 0.0 ? metric_step : opt_.metric_step;
  auto grr = [&](const Vector3d& z) { return 0.5 * (inv_gss((tau + z[0]) / kSqrt2, z[1], z[2], hj) - 1.0); };
  return 0.25 * fd_hessian(grr, hm, {0, 1, 2});
}

Matrix3d FermiChart::D_curvature(double tau) const {
  const GeodesicState st = axis_state(tau / kSqrt2);
  const SpeedSample sp = medium().wave_speed(mode(), st.x);
  const double c = sp.c;
  const Vector3d gs = -sp.grad / c;
  const Matrix3d hs = -sp.hess / c + sp.grad * sp.grad.transpose() / (c * c);
  const Matrix3d a = hs - gs * gs.transpose() + 0.5 * gs.squaredNorm() * Matrix3d::Identity();
  const Vector3d u = st.v / c;
  const Vector3d e[2] = {st.e2 / c, st.e3 / c};
  Matrix3d d = Matrix3d::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double rm = -c * c * (e[i].dot(a * e[j]) + (i == j ? u.dot(a * u) : 0.0));
      d(i + 1, j + 1) = 0.25 * rm;
    }
  }
  return d;
}

void FermiChart::prepare_axis(double tau_lo, double tau_hi) {
  if (flat_) return;
  if (!d_table_.empty() && tau_lo >= d_lo_ + 2.0 * opt_.d_spacing && tau_hi <= d_hi_) return;
  const double h = opt_.d_spacing;
  d_lo_ = tau_lo - 2.0 * h;
  const int n = static_cast<int>(std::ceil((tau_hi - tau_lo) / h)) + 5;
  std::vector<Matrix2d> table(static_cast<std::size_t>(n));
  parallel_for(table.size(), [&](std::size_t k) {
    const double tau = d_lo_ + double(k) * h;
    const double s = tau / kSqrt2;
    auto gss = [&](const Vector3d& z) { return inv_gss(s, z[1], z[2], opt_.jac_step); };
    table[k] = (0.125 * fd_hessian(gss, opt_.metric_step, {1, 2})).bottomRightCorner<2, 2>();
  });
  d_table_ = std::move(table);
  d_hi_ = d_lo_ + double(n - 3) * h;
}

Matrix3d FermiChart::D(double tau) const {
  Matrix3d out = Matrix3d::Zero();
  if (flat_) return out;
  if (d_table_.empty()) throw GeometryError("axis data not prepared");
  const double u = (tau - d_lo_) / opt_.d_spacing;
  const long k = static_cast<long>(std::floor(u));
  if (k < 1 || k + 2 >= static_cast<long>(d_table_.size())) throw GeometryError("tau outside prepared axis range");
  double w[4];
  lagrange4(u - double(k), w);
  Matrix2d b = Matrix2d::Zero();
  for (int i = 0; i < 4; ++i) b += w[i] * d_table_[static_cast<std::size_t>(k - 1 + i)];
  out.bottomRightCorner<2, 2>() = 0.5 * (b + b.transpose());
  return out;
}

AxisTaylor FermiChart::axis_taylor(double tau) const {
  if (tau < tau_first() || tau > tau_last()) throw GeometryError("tau out of range");
  const GeodesicState st = axis_state(tau / kSqrt2);
  const Vector3d dx = st.v / kSqrt2;  // d x / d tau along the axis
  const MaterialModel& m = medium();
  AxisTaylor a;
  a.D = D(tau);
  a.C = C();
  const SpeedSample sp = m.wave_speed_grad(mode(), st.x);
  a.c = sp.c;
  a.dc = sp.grad.dot(dx);
  const FieldSample mu = m.mu().eval_grad(st.x);
  const FieldSample rho = m.rho().eval_grad(st.x);
  a.mu = mu.value;
  a.dmu = mu.grad.dot(dx);
  a.rho = rho.value;
  a.drho = rho.grad.dot(dx);
  if (mode() == WaveMode::P) {
    const FieldSample l = m.lambda().eval_grad(st.x);
    a.modulus = l.value + 2.0 * mu.value;
    a.dmodulus = (l.grad + 2.0 * mu.grad).dot(dx);
  } else {
    a.modulus = a.mu;
    a.dmodulus = a.dmu;
  }
  return a;
}

void FermiChart::build_cache(double s_lo, double s_hi) {
  const double h = opt_.cache_spacing;
  s_lo = std::max(s_lo, geo_->t_first() - t0_);
  s_hi = std::min(s_hi, geo_->t_last() - t0_);
  if (!(s_hi > s_lo)) throw GeometryError("empty cache range");
  cache_s0_ = s_lo - h;
  cache_ns_ = static_cast<int>(std::ceil((s_hi - s_lo) / h)) + 3;
  cache_ny_ = 2 * static_cast<int>(std::ceil(opt_.tube_radius / h)) + 3;
  const double y0 = -0.5 * (cache_ny_ - 1) * h;
  std::vector<Vector3d> data(static_cast<std::size_t>(cache_ns_ * cache_ny_ * cache_ny_));
  std::vector<Vector3d> axis(static_cast<std::size_t>(cache_ns_));
  parallel_for(static_cast<std::size_t>(cache_ns_), [&](std::size_t i) {
    const double s = cache_s0_ + double(i) * h;
    const GeodesicState b = axis_state(s);
    axis[i] = b.x;
    for (int j = 0; j < cache_ny_; ++j) {
      for (int k = 0; k < cache_ny_; ++k) {
        const double y2 = y0 + j * h, y3 = y0 + k * h;
        data[(i * cache_ny_ + j) * cache_ny_ + k] = shoot(medium(), mode(), b.x, y2 * b.e2 + y3 * b.e3, substeps_);
      }
    }
  });
  cache_ = std::move(data);
  cache_axis_ = std::move(axis);
}

Vector3d FermiChart::forward_cached(const Vector3d& sy, Matrix3d* jac) const {
  if (cache_.empty()) throw GeometryError("chart cache not built");
  const double h = opt_.cache_spacing;
  const double y0 = -0.5 * (cache_ny_ - 1) * h;
  const double u[3] = {(sy[0] - cache_s0_) / h, (sy[1] - y0) / h, (sy[2] - y0) / h};
  const int lim[3] = {cache_ns_, cache_ny_, cache_ny_};
  int base[3];
  double frac[3];
  for (int d = 0; d < 3; ++d) {
    const int k = std::clamp(static_cast<int>(std::floor(u[d])), 1, lim[d] - 3);
    base[d] = k;
    frac[d] = u[d] - k;
  }
  const CatmullRom ws(frac[0]), w2(frac[1]), w3(frac[2]);
  Vector3d x = Vector3d::Zero();
  Matrix3d j = Matrix3d::Zero();
  for (int a = 0; a < 4; ++a) {
    const std::size_t ia = static_cast<std::size_t>(base[0] - 1 + a);
    for (int b = 0; b < 4; ++b) {
      const std::size_t ib = static_cast<std::size_t>(base[1] - 1 + b);
      for (int c = 0; c < 4; ++c) {
        const std::size_t ic = static_cast<std::size_t>(base[2] - 1 + c);
        const Vector3d& p = cache_[(ia * cache_ny_ + ib) * cache_ny_ + ic];
        x += ws.w[a] * w2.w[b] * w3.w[c] * p;
        if (jac) {
          j.col(0) += ws.dw[a] * w2.w[b] * w3.w[c] * p;
          j.col(1) += ws.w[a] * w2.dw[b] * w3.w[c] * p;
          j.col(2) += ws.w[a] * w2.w[b] * w3.dw[c] * p;
        }
      }
    }
  }
  if (jac) *jac = j / h;
  return x;
}

bool FermiChart::invert(const Vector3d& x, Vector3d& sy, Matrix3d* jac) const {
  if (cache_.empty()) throw GeometryError("chart cache not built");
  const double h = opt_.cache_spacing;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < cache_axis_.size(); ++i) {
    const double d = (cache_axis_[i] - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const GeodesicState st = axis_state(cache_s0_ + double(best) * h);
  const double c2 = st.v.squaredNorm();
  const Vector3d d = x - st.x;
  sy = Vector3d(cache_s0_ + double(best) * h + d.dot(st.v) / c2, d.dot(st.e2) / c2, d.dot(st.e3) / c2);

  Matrix3d j;
  Vector3d r = forward_cached(sy, &j) - x;
  const double tol = 1e-13 * (1.0 + x.norm());
  for (int it = 0; it < 40 && r.norm() > tol; ++it) {
    const Vector3d step = j.partialPivLu().solve(r);
    double lam = 1.0;
    for (int ls = 0; ls < 20; ++ls, lam *= 0.5) {
      const Vector3d trial = sy - lam * step;
      Matrix3d jt;
      const Vector3d rt = forward_cached(trial, &jt) - x;
      if (rt.norm() < r.norm() || ls == 19) {
        sy = trial;
        r = rt;
        j = jt;
        break;
      }
    }
  }
  if (jac) *jac = j;
  const double s_lo = cache_s0_ + h, s_hi = cache_s0_ + (cache_ns_ - 2) * h;
  return r.norm() <= 1e-9 * (1.0 + x.norm()) && sy.tail<2>().norm() <= opt_.tube_radius && sy[0] >= s_lo &&
         sy[0] <= s_hi;
}

}  // namespace elastobeam
