#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "elastobeam/beam.hpp"
#include "json.hpp"

namespace elastobeam {

class InteractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covectors (c, xi) on the S/P/S cones at p = (t, x0) with k0 z0 + k1 z1 + k2 z2 = 0.
struct CovectorTriple {
  Eigen::Vector3d x0 = Eigen::Vector3d::Zero();
  double t = 0.0;
  double cP = 0.0, cS = 0.0;
  std::array<Eigen::Vector3d, 3> xi;  // unit; index 0 is the S covector built from 1 and 2
  std::array<double, 3> kappa{};
  double b = 0.0;                     // raw weight: z0 is proportional to z1 + b z2
  Eigen::Vector3d alpha = Eigen::Vector3d::Zero();  // unit normal to span{xi1, xi2}, alpha_3 > 0

  Eigen::Vector4d zeta(int k) const;
  double cone_residual() const;
  double dependence_residual() const;
  /// Angle between the spatial parts of z0 and z2 (radians).
  double independence_angle() const;
  nlohmann::json to_json() const;
};

CovectorTriple select_covectors(const MaterialModel& m, const Eigen::Vector3d& x0, const Eigen::Vector3d& xi1,
                                const Eigen::Vector3d& xi2);

struct Moduli {
  double lambda = 0.0, mu = 0.0, A = 0.0, B = 0.0, C = 0.0;
};
Moduli moduli_at(const MaterialModel& m, const Eigen::Vector3d& x);

/// Quadratic interaction integrand; gradient matrices use U(i, j) = d u_i / d x_j.
cplx interaction_integrand(const Moduli& k, const Matrix3cd& U1, const Matrix3cd& U2, const Matrix3cd& V);
/// Term-by-term index summation of the same expression.
cplx interaction_integrand_loops(const Moduli& k, const Matrix3cd& U1, const Matrix3cd& U2, const Matrix3cd& V);

/// Integrand on rank-one arguments alpha_k (x) xi_k with alpha_1 = xi_1 and alpha_2 = alpha_0 = alpha.
cplx leading_symbol(const Moduli& k, const CovectorTriple& tr, const Eigen::Vector3d& alpha);
inline cplx leading_symbol(const Moduli& k, const CovectorTriple& tr) { return leading_symbol(k, tr, tr.alpha); }
/// (lambda + B)(xi2.xi0) + (2 mu + A/2)(xi1.xi2)(xi1.xi0).
double two_term_symbol(const Moduli& k, const CovectorTriple& tr);

struct TripleOptions {
  double delta = 0.5;
  TraceOptions trace;
  ChartOptions chart;
  /// Half-length in s of the cached chart region around p.
  double cache_half = 0.8;
};

/// The P beam along xi1, SV beam along xi2 and SV beam along xi0, all through p.
/// Beams with negative weight are conjugated so that Im S >= 0.
struct TripleBeams {
  CovectorTriple triple;
  std::array<std::shared_ptr<GaussianBeam>, 3> beam;  // index as in the triple
  std::array<double, 3> weight{};                     // phase multipliers
  /// Largest |t - t_p| at which two beam tubes still overlap.
  double overlap_radius = 0.0;
};

TripleBeams build_triple_beams(const MaterialModel& m, const CovectorTriple& tr, const TripleOptions& opt = {});

/// Sum phase S and amplitude product F = chi1 chi2 chi0 G(...) at a spacetime point.
struct TripleSample {
  bool inside = false;
  cplx S, F;
};
TripleSample sample_triple(const TripleBeams& tb, double t, const Eigen::Vector3d& x);

/// Hessian of S at p in (t, x) and the prediction pieces.
struct StationaryPhase {
  Eigen::Matrix4cd Q;
  cplx det_factor;  // det(-i Q)^{-1/2}
  cplx F_p;         // integrand amplitude at p
  cplx W_p;         // product of amplitude and gradient scales: F_p = W_p * symbol
  cplx symbol;      // leading symbol from the medium moduli
  cplx prediction;  // (2 pi)^2 det_factor F_p
};
StationaryPhase stationary_phase_prediction(const TripleBeams& tb);

/// det(-i Q)^{-1/2} as a product of principal square roots of the eigenvalues.
cplx inverse_sqrt_det_minus_i(const Eigen::Matrix4cd& Q);

/// Tensor Gauss-Legendre quadrature of rho^2 * int e^{i rho S} F over a box
/// whitened by Im Q, spatial nodes outermost.
struct QuadratureOptions {
  int nodes = 32;          // per dimension at the coarse level; the fine level doubles it
  double half_width = 6.0; // in units of 1/sqrt(rho) in whitened coordinates
  double tolerance = 0.01; // relative change between levels
};

struct QuadratureResult {
  cplx value, coarse;
  double rel_change = 0.0;
  double points_per_wavelength = 0.0;
};

/// Generic integrand over y = (t - t_p, x - x0): returns (S, F) per point, per spatial slice.
QuadratureResult oscillatory_integral(const TripleBeams& tb, const Eigen::Matrix4cd& Q, double rho,
                                      const QuadratureOptions& opt = {});
/// Same quadrature for the model integrand e^{i rho y^T Q y / 2}.
QuadratureResult gaussian_model_integral(const Eigen::Matrix4cd& Q, double rho, const QuadratureOptions& opt = {});

struct SumPhaseDiagnostics {
  double S_p = 0.0;
  double grad_S_p = 0.0;
  double min_ratio = 0.0;  // min Im S / d^2 over samples
  int samples = 0;
};
SumPhaseDiagnostics sum_phase_diagnostics(const TripleBeams& tb, int samples, double radius, unsigned seed);

struct InteractionMeasurement {
  CovectorTriple triple;
  std::vector<double> rho;
  std::vector<cplx> value;   // rho^2 I(rho)
  std::vector<cplx> coarse;
  std::vector<double> rel_error;  // |value - prediction| / |prediction|
  StationaryPhase sp;
  cplx extrapolated;       // Richardson limit in 1/rho from the two largest rho
  cplx symbol_estimate;    // extrapolated / ((2 pi)^2 det_factor W_p)
  double remainder_slope = 0.0;
  SumPhaseDiagnostics diag;
  double overlap_radius = 0.0;
  nlohmann::json to_json() const;
};

InteractionMeasurement measure_interaction(const MaterialModel& m, const CovectorTriple& tr,
                                           const std::vector<double>& rhos, const TripleOptions& topt = {},
                                           const QuadratureOptions& qopt = {}, unsigned seed = 0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace elastobeam
