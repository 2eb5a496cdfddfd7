#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "elastobeam/medium.hpp"

namespace elastobeam {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position, Euclidean velocity (|v| = c, i.e. unit g-speed) and a parallel
/// frame e2, e3 (Euclidean components, |e| = c).
struct GeodesicState {
  Eigen::Vector3d x, v, e2, e3;
};

GeodesicState geodesic_rhs(const MaterialModel& m, WaveMode mode, const GeodesicState& s);
GeodesicState rk4_step(const MaterialModel& m, WaveMode mode, const GeodesicState& s, double h);
/// Integrates over a parameter interval of length `span` (may be negative) in `steps` RK4 steps.
GeodesicState integrate(const MaterialModel& m, WaveMode mode, GeodesicState s, double span, int steps);

struct TraceOptions {
  double h = 1e-3;
  /// Largest |t| allowed before declaring the geodesic trapped.
  double trapping_bound = 50.0;
  /// Optional initial frame vectors (need not be normalized); completed to a g-orthonormal frame.
  Eigen::Vector3d e2_hint = Eigen::Vector3d::Zero();
};

class Geodesic {
 public:
  WaveMode mode() const noexcept { return mode_; }
  double step() const noexcept { return h_; }
  const MaterialModel& medium() const noexcept { return *medium_; }
  std::shared_ptr<const MaterialModel> medium_ptr() const noexcept { return medium_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  double t_at(std::size_t i) const noexcept { return t_first_ + double(i) * h_; }
  const GeodesicState& node(std::size_t i) const { return nodes_.at(i); }
  /// Parameter range covered by nodes (the extended box).
  double t_first() const noexcept { return t_first_; }
  double t_last() const noexcept { return t_at(nodes_.size() - 1); }
  /// Exit times from the physical box.
  double t_minus() const noexcept { return t_minus_; }
  double t_plus() const noexcept { return t_plus_; }

  /// State at arbitrary t by an RK4 substep from the nearest node at or below t.
  GeodesicState at(double t) const;

  /// CSV columns: t,x1,x2,x3,v1,v2,v3,e2_1,e2_2,e2_3,e3_1,e3_2,e3_3
  void write_csv(std::ostream& out) const;

 private:
  friend Geodesic trace_geodesic(const MaterialModel&, WaveMode, const Eigen::Vector3d&,
                                 const Eigen::Vector3d&, const TraceOptions&);
  friend Geodesic parallel_transport(const Geodesic&, const Eigen::Vector3d&, const Eigen::Vector3d&);

  std::shared_ptr<const MaterialModel> medium_;
  WaveMode mode_ = WaveMode::P;
  double h_ = 1e-3;
  double t_first_ = 0.0;
  double t_minus_ = 0.0, t_plus_ = 0.0;
  std::vector<GeodesicState> nodes_;
};

/// Traces the geodesic through x0 (at t = 0) with initial direction v0 in both
/// directions until it leaves the extended box.
Geodesic trace_geodesic(const MaterialModel& m, WaveMode mode, const Eigen::Vector3d& x0,
                        const Eigen::Vector3d& v0, const TraceOptions& opt = {});

/// Re-transports the frame (e2, e3) given at t = 0 along an existing geodesic.
/// The input must be g-orthonormal and g-orthogonal to the velocity.
Geodesic parallel_transport(const Geodesic& geo, const Eigen::Vector3d& e2, const Eigen::Vector3d& e3);

/// Largest deviation from g-orthonormality of {v, e2, e3} over all nodes.
double frame_drift(const Geodesic& geo);

struct ChartOptions {
  double tube_radius = 0.5;
  /// RK4 substeps for the exponential map; 0 picks 1 for homogeneous media and 6 otherwise.
  int exp_substeps = 0;
  /// Central-difference steps for the Jacobian of the chart and for metric derivatives.
  double jac_step = 1e-2;
  double metric_step = 2e-2;
  /// Node spacing of the tabulated D(tau).
  double d_spacing = 0.02;
  /// Node spacing of the tabulated forward map.
  double cache_spacing = 0.04;
};

/// On-axis data at a given tau.
struct AxisTaylor {
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  double c = 0.0, dc = 0.0;           // speed and d/dtau
  double modulus = 0.0, dmodulus = 0.0;  // lambda + 2 mu (P) or mu (S)
  double mu = 0.0, dmu = 0.0;
  double rho = 0.0, drho = 0.0;
};

using Christoffel = std::array<Eigen::Matrix3d, 3>;  // [k](i, j)

/// Fermi chart around the null geodesic t -> (t, gamma(t)) centred at t0.
/// Spatial coordinates (s, y2, y3) map to exp_{gamma(t0+s)}(y2 e2 + y3 e3);
/// spacetime coordinates are tau = (t - t0 + s)/sqrt2, r = (-t + t0 + s)/sqrt2,
/// and z = (r, y2, y3).
class FermiChart {
 public:
  FermiChart(std::shared_ptr<const Geodesic> geo, double t0, ChartOptions opt = {});

  const Geodesic& geodesic() const noexcept { return *geo_; }
  std::shared_ptr<const Geodesic> geodesic_ptr() const noexcept { return geo_; }
  const MaterialModel& medium() const noexcept { return geo_->medium(); }
  WaveMode mode() const noexcept { return geo_->mode(); }
  const ChartOptions& options() const noexcept { return opt_; }
  double t0() const noexcept { return t0_; }
  /// Axis parameter range available (from the node range of the geodesic).
  double tau_first() const noexcept;
  double tau_last() const noexcept;
  /// Axis parameters of the exits from the physical box.
  double tau_minus() const noexcept;
  double tau_plus() const noexcept;

  static Eigen::Matrix3d C() noexcept;

  GeodesicState axis_state(double s) const;
  Eigen::Vector3d forward(double s, double y2, double y3) const;
  Eigen::Vector3d forward(const Eigen::Vector3d& sy) const { return forward(sy[0], sy[1], sy[2]); }
  /// d x / d (s, y2, y3) by Richardson-extrapolated central differences.
  Eigen::Matrix3d jacobian(const Eigen::Vector3d& sy, double step = 0.0) const;
  /// Inverse of the g-metric in (s, y2, y3) coordinates.
  Eigen::Matrix3d inverse_metric_y(const Eigen::Vector3d& sy, double step = 0.0) const;
  /// Inverse spacetime metric in (tau, r, y2, y3).
  Eigen::Matrix4d lorentz_inverse_metric(double tau, const Eigen::Vector3d& z) const;

  /// Closed-form symbols of the Euclidean metric c^2 g in (s, y2, y3) coordinates; exact on the axis (y = 0).
  Christoffel christoffel(const Eigen::Vector3d& sy) const;
  /// Same symbols from finite differences of the chart metric.
  Christoffel christoffel_fd(const Eigen::Vector3d& sy) const;

  /// D_ij = (1/4) d^2 gbar^{rr} / dz^i dz^j on the axis, full finite-difference evaluation.
  Eigen::Matrix3d D_fd(double tau, double jac_step = 0.0, double metric_step = 0.0) const;
  /// D from the curvature of g (independent of the chart).
  Eigen::Matrix3d D_curvature(double tau) const;
  /// Tabulates D over [tau_lo, tau_hi]; must precede concurrent calls to D().
  void prepare_axis(double tau_lo, double tau_hi);
  /// Interpolated D from the table (row and column 1 are zero by construction).
  Eigen::Matrix3d D(double tau) const;
  AxisTaylor axis_taylor(double tau) const;

  /// Tabulates the forward map for s in [s_lo, s_hi] on the transverse square of the tube.
  void build_cache(double s_lo, double s_hi);
  bool has_cache() const noexcept { return !cache_.empty(); }
  /// Interpolated forward map and its Jacobian.
  Eigen::Vector3d forward_cached(const Eigen::Vector3d& sy, Eigen::Matrix3d* jac = nullptr) const;
  /// Inverse of the cached map; false when x is outside the tabulated tube.
  bool invert(const Eigen::Vector3d& x, Eigen::Vector3d& sy, Eigen::Matrix3d* jac = nullptr) const;

 private:
  double inv_gss(double s, double y2, double y3, double step) const;

  std::shared_ptr<const Geodesic> geo_;
  double t0_;
  ChartOptions opt_;
  int substeps_ = 1;
  bool flat_ = false;

  double d_lo_ = 0.0, d_hi_ = 0.0;
  std::vector<Eigen::Matrix2d> d_table_;

  double cache_s0_ = 0.0;
  int cache_ns_ = 0, cache_ny_ = 0;
  std::vector<Eigen::Vector3d> cache_;
  std::vector<Eigen::Vector3d> cache_axis_;
};

}  // namespace elastobeam
