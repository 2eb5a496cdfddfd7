#pragma once

#include <complex>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "elastobeam/geometry.hpp"

namespace elastobeam {

using cplx = std::complex<double>;
using Matrix3cd = Eigen::Matrix3cd;
using Vector3cd = Eigen::Vector3cd;

/// Solution of dY/dtau = C Z, dZ/dtau = -D(tau) Y with H = Z Y^{-1}, sampled
/// on a uniform grid containing tau = 0.
class RiccatiPath {
 public:
  double step() const noexcept { return h_; }
  std::size_t size() const noexcept { return Y_.size(); }
  double tau_at(std::size_t k) const noexcept { return tau0_ + double(k) * h_; }
  double tau_first() const noexcept { return tau0_; }
  double tau_last() const noexcept { return tau_at(Y_.size() - 1); }

  const Matrix3cd& Y(std::size_t k) const { return Y_.at(k); }
  const Matrix3cd& Z(std::size_t k) const { return Z_.at(k); }
  const Matrix3cd& H(std::size_t k) const { return H_.at(k); }
  /// Continuous branch of det(Y)^{1/2}.
  cplx sqrt_det_Y(std::size_t k) const { return sq_.at(k); }

  /// Cubic Hermite interpolants between nodes.
  Matrix3cd H_at(double tau) const;
  Matrix3cd H_dot_at(double tau) const;
  cplx sqrt_det_Y_at(double tau) const;

  /// det(Im H) |det Y|^2 at node k.
  double invariant(std::size_t k) const;
  /// Largest relative deviation of the invariant from its value at tau = 0.
  double invariant_drift() const;
  /// Smallest eigenvalue of Im H over all nodes.
  double min_imag_eigenvalue() const;
  double max_asymmetry() const;

 private:
  friend RiccatiPath solve_riccati(const FermiChart&, const Matrix3cd&, const Matrix3cd&, double, double, double);
  std::size_t locate(double tau, double& f) const;

  double tau0_ = 0.0, h_ = 1e-3;
  std::size_t centre_ = 0;
  std::vector<Matrix3cd> Y_, Z_, H_, Hdot_;
  std::vector<cplx> sq_, sqdot_;
};

/// Integrates the Riccati system from (Y0, H0 Y0) at tau = 0 over [tau_lo, tau_hi].
/// The chart's axis data must cover the interval. Throws GeometryError when Y
/// becomes ill-conditioned (condition number above 1e12).
RiccatiPath solve_riccati(const FermiChart& chart, const Matrix3cd& H0, const Matrix3cd& Y0, double tau_lo,
                          double tau_hi, double step = 1e-3);

enum class Polarization { P, SV };

struct BeamOptions {
  Polarization pol = Polarization::P;
  /// Transverse direction of the SV polarization: 1 for y2, 2 for y3.
  int alpha = 1;
  /// Cutoff width; capped at twice the chart tube radius.
  double delta = 0.5;
  Matrix3cd H0 = cplx(0, 1) * Matrix3cd::Identity();
  Matrix3cd Y0 = Matrix3cd::Identity();
  /// Axis interval; when empty the box exits padded by 0.1 are used.
  double tau_lo = 0.0, tau_hi = 0.0;
  double step = 1e-3;
  /// Phase multiplier; a conjugated beam uses conj(phi) and conj(a).
  double kappa = 1.0;
  bool conjugate = false;
};

/// Local data of a beam at a spacetime point.
struct BeamSample {
  double tau = 0.0;
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  double cutoff = 0.0;
  cplx phi;                 // r + z^T H z
  cplx phi_t;               // d phi / d t
  Vector3cd grad_x;         // d phi / d x
  Vector3cd amp;            // Cartesian amplitude vector
};

/// Smooth cutoff: 1 on |t| <= 1/4, 0 on |t| >= 1/2.
double cutoff(double t);

class GaussianBeam {
 public:
  /// Prepares the chart's axis data for the beam interval if needed.
  GaussianBeam(std::shared_ptr<FermiChart> chart, BeamOptions opt = {});

  const FermiChart& chart() const noexcept { return *chart_; }
  std::shared_ptr<const FermiChart> chart_ptr() const noexcept { return chart_; }
  const RiccatiPath& riccati() const noexcept { return path_; }
  const BeamOptions& options() const noexcept { return opt_; }
  WaveMode mode() const noexcept { return chart_->mode(); }

  /// Scalar amplitude A(tau) = det(Y)^{-1/2} (c rho)^{-1/2}.
  cplx amplitude(double tau) const;
  cplx amplitude_dot(double tau) const;
  /// |d/dtau ln(A^2 det Y * modulus / c)| by finite differences; zero for the exact amplitude.
  double log_conservation_residual(double tau) const;
  cplx phase(double tau, const Eigen::Vector3d& z) const;
  /// d phi/d(tau, r, y2, y3) with d/dtau from a finite difference of interpolated H.
  Eigen::Vector4cd phase_gradient_fd(double tau, const Eigen::Vector3d& z) const;

  /// Point sample; false when the point is outside the chart or the beam interval.
  /// Requires the chart cache (build_cache) for the inversion.
  bool sample(double t, const Eigen::Vector3d& x, BeamSample& out) const;
  /// Same as sample() for an already inverted point: chart coordinates sy and
  /// the inverse transpose of the chart Jacobian there. Uses the tabulated amplitude.
  bool sample_at(double t, const Eigen::Vector3d& sy, const Eigen::Matrix3d& jac_inv_t, BeamSample& out) const;
  /// Hessian of phi in ambient (t, x1, x2, x3) at the axis point with chart parameter s (t = t0 + s).
  Eigen::Matrix4cd ambient_hessian(double s) const;
  /// Displacement chi a exp(i varrho kappa phi), conjugated when requested.
  Vector3cd evaluate(double varrho, double t, const Eigen::Vector3d& x) const;

  /// rho <dphi, dphi> in the spacetime metric at chart point (tau, z).
  cplx eikonal_residual(double tau, const Eigen::Vector3d& z) const;

  /// CSV columns: tau, Re/Im of H11 H12 H13 H22 H23 H33, detY_re, detY_im, A_re, A_im, invariant.
  void write_csv(std::ostream& out, std::size_t stride = 1) const;

 private:
  std::shared_ptr<FermiChart> chart_;
  BeamOptions opt_;
  RiccatiPath path_;
  std::vector<cplx> amp_, amp_dot_;
  cplx amplitude_table(double tau) const;
};

/// Terms of the first-order transport equation on the axis.
struct TransportResidual {
  /// Modulus of the b-free part; zero for the correct amplitude.
  double value = 0.0;
  /// Coefficient multiplying the unknown next-order amplitude; identically zero in theory.
  double b_factor = 0.0;
  cplx raw;
};

/// Evaluates the transport equation at axis parameter tau by contracting the
/// full divergence expression with numerical Christoffel symbols. The scalar
/// amplitude is multiplied by (1 + eps * tau) to test sensitivity.
TransportResidual transport_residual(const GaussianBeam& beam, double tau, double eps = 0.0);

/// Pairing e^j d_j phi of the SV frame vector with the phase gradient at chart point (tau, z).
cplx sv_frame_pairing(const GaussianBeam& beam, double tau, const Eigen::Vector3d& z);

}  // namespace elastobeam
