#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Geometry>

#include "elastobeam/geometry.hpp"

namespace elastobeam {

using Eigen::Vector3d;

GeodesicState geodesic_rhs(const MaterialModel& m, WaveMode mode, const GeodesicState& s) {
  const SpeedSample sp = m.wave_speed_grad(mode, s.x);
  const Vector3d gs = -sp.grad / sp.c;  // gradient of sigma = -ln c
  auto transport = [&](const Vector3d& e) -> Vector3d {
    return -(s.v * gs.dot(e) + e * gs.dot(s.v) - s.v.dot(e) * gs);
  };
  GeodesicState d;
  d.x = s.v;
  d.v = transport(s.v);
  d.e2 = transport(s.e2);
  d.e3 = transport(s.e3);
  return d;
}

namespace {

GeodesicState axpy(const GeodesicState& a, double k, const GeodesicState& d) {
  return {a.x + k * d.x, a.v + k * d.v, a.e2 + k * d.e2, a.e3 + k * d.e3};
}

bool finite(const GeodesicState& s) {
  return s.x.allFinite() && s.v.allFinite() && s.e2.allFinite() && s.e3.allFinite();
}

}  // namespace

GeodesicState rk4_step(const MaterialModel& m, WaveMode mode, const GeodesicState& s, double h) {
  const GeodesicState k1 = geodesic_rhs(m, mode, s);
  const GeodesicState k2 = geodesic_rhs(m, mode, axpy(s, 0.5 * h, k1));
  const GeodesicState k3 = geodesic_rhs(m, mode, axpy(s, 0.5 * h, k2));
  const GeodesicState k4 = geodesic_rhs(m, mode, axpy(s, h, k3));
  GeodesicState out = s;
  out.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  out.e2 += h / 6.0 * (k1.e2 + 2.0 * k2.e2 + 2.0 * k3.e2 + k4.e2);
  out.e3 += h / 6.0 * (k1.e3 + 2.0 * k2.e3 + 2.0 * k3.e3 + k4.e3);
  return out;
}

GeodesicState integrate(const MaterialModel& m, WaveMode mode, GeodesicState s, double span, int steps) {
  const double h = span / steps;
  for (int i = 0; i < steps; ++i) s = rk4_step(m, mode, s, h);
  return s;
}

GeodesicState Geodesic::at(double t) const {
  const double u = (t - t_first_) / h_;
  long k = static_cast<long>(std::floor(u));
  k = std::clamp<long>(k, 0, static_cast<long>(nodes_.size()) - 1);
  const double dt = t - t_at(static_cast<std::size_t>(k));
  if (dt == 0.0) return nodes_[static_cast<std::size_t>(k)];
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(dt) / h_ - 1e-9)));
  return integrate(*medium_, mode_, nodes_[static_cast<std::size_t>(k)], dt, steps);
}

void Geodesic::write_csv(std::ostream& out) const {
  out << "t,x1,x2,x3,v1,v2,v3,e2_1,e2_2,e2_3,e3_1,e3_2,e3_3\n";
  out.precision(12);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    out << t_at(i);
    for (const Vector3d* v : {&n.x, &n.v, &n.e2, &n.e3}) {
      for (int j = 0; j < 3; ++j) out << ',' << (*v)[j];
    }
    out << '\n';
  }
}

namespace {

// Walks from `start` in steps of h while inside the extended box.
std::vector<GeodesicState> march(const MaterialModel& m, WaveMode mode, GeodesicState s, double h,
                                 double bound) {
  std::vector<GeodesicState> out;
  double t = 0.0;
  for (;;) {
    s = rk4_step(m, mode, s, h);
    t += std::abs(h);
    if (!finite(s)) throw GeometryError("geodesic integration produced a non-finite state");
    if (!m.box().contains(s.x)) return out;
    if (t > bound) throw GeometryError("trapping bound exceeded: geodesic still inside the domain");
    out.push_back(s);
  }
}

double exit_time(const Geodesic& g, double t_in, double t_out, const Box& inner) {
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (t_in + t_out);
    (inner.contains(g.at(mid).x) ? t_in : t_out) = mid;
  }
  return 0.5 * (t_in + t_out);
}

}  // namespace

Geodesic trace_geodesic(const MaterialModel& m, WaveMode mode, const Vector3d& x0, const Vector3d& v0,
                        const TraceOptions& opt) {
  if (!(opt.h > 0.0)) throw GeometryError("step must be positive");
  if (v0.norm() == 0.0) throw GeometryError("initial direction is zero");
  const Box inner = m.box().inner();
  if (!inner.contains(x0)) throw GeometryError("initial point outside the physical domain");

  const double c0 = m.speed(mode, x0);
  const Vector3d u = v0.normalized();
  Vector3d hint = opt.e2_hint;
  if (hint.norm() == 0.0 || hint.normalized().cross(u).norm() < 1e-6) {
    Eigen::Index k;
    u.cwiseAbs().minCoeff(&k);
    hint = Vector3d::Unit(k);
  }
  const Vector3d a2 = (hint - hint.dot(u) * u).normalized();
  const Vector3d a3 = u.cross(a2);
  GeodesicState s0{x0, c0 * u, c0 * a2, c0 * a3};

  auto fwd = march(m, mode, s0, opt.h, opt.trapping_bound);
  auto bwd = march(m, mode, s0, -opt.h, opt.trapping_bound);

  Geodesic g;
  g.medium_ = std::make_shared<const MaterialModel>(m);
  g.mode_ = mode;
  g.h_ = opt.h;
  g.t_first_ = -opt.h * static_cast<double>(bwd.size());
  g.nodes_.reserve(fwd.size() + bwd.size() + 1);
  g.nodes_.assign(bwd.rbegin(), bwd.rend());
  g.nodes_.push_back(s0);
  g.nodes_.insert(g.nodes_.end(), fwd.begin(), fwd.end());

  const std::size_t c = bwd.size();
  std::size_t k = c;
  while (k + 1 < g.nodes_.size() && inner.contains(g.nodes_[k + 1].x)) ++k;
  g.t_plus_ = exit_time(g, g.t_at(k), g.t_at(k) + opt.h, inner);
  k = c;
  while (k > 0 && inner.contains(g.nodes_[k - 1].x)) --k;
  g.t_minus_ = exit_time(g, g.t_at(k), g.t_at(k) - opt.h, inner);
  return g;
}

Geodesic parallel_transport(const Geodesic& geo, const Vector3d& e2, const Vector3d& e3) {
  const std::size_t c = static_cast<std::size_t>(std::llround(-geo.t_first_ / geo.h_));
  const GeodesicState& n0 = geo.nodes_.at(c);
  const double c2 = n0.v.squaredNorm();
  const double err = std::max({std::abs(e2.squaredNorm() / c2 - 1.0), std::abs(e3.squaredNorm() / c2 - 1.0),
                               std::abs(e2.dot(e3) / c2), std::abs(e2.dot(n0.v) / c2),
                               std::abs(e3.dot(n0.v) / c2)});
  if (err > 1e-10) throw GeometryError("transport basis is not g-orthonormal and orthogonal to the velocity");

  Geodesic out = geo;
  GeodesicState s{n0.x, n0.v, e2, e3};
  out.nodes_[c] = s;
  for (std::size_t i = c + 1; i < out.nodes_.size(); ++i) {
    s = rk4_step(*geo.medium_, geo.mode_, s, geo.h_);
    out.nodes_[i] = s;
  }
  s = out.nodes_[c];
  for (std::size_t i = c; i-- > 0;) {
    s = rk4_step(*geo.medium_, geo.mode_, s, -geo.h_);
    out.nodes_[i] = s;
  }
  return out;
}

double frame_drift(const Geodesic& geo) {
  double worst = 0.0;
  for (std::size_t i = 0; i < geo.size(); ++i) {
    const auto& n = geo.node(i);
    const double c = geo.medium().speed(geo.mode(), n.x);
    const double k = 1.0 / (c * c);
    const Vector3d* b[3] = {&n.v, &n.e2, &n.e3};
    for (int a = 0; a < 3; ++a) {
      for (int d = a; d < 3; ++d) {
        worst = std::max(worst, std::abs(k * b[a]->dot(*b[d]) - (a == d ? 1.0 : 0.0)));
      }
    }
  }
  return worst;
}

}  // namespace elastobeam
