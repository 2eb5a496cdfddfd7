#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "elastobeam/interaction.hpp"
#include "json.hpp"

namespace elastobeam {

class RecoveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One measured leading-symbol value with the triple it came from.
struct SymbolSample {
  CovectorTriple triple;
  cplx value;
};

struct ABRecovery {
  double lambda_plus_B = 0.0;
  double two_mu_plus_A_half = 0.0;
  double A = 0.0, B = 0.0;
  double residual = 0.0;   // Euclidean norm over real and imaginary parts
  double condition = 0.0;  // of the design matrix
};

/// Rows [xi2.xi0, (xi1.xi2)(xi1.xi0)] of the least-squares design.
Eigen::MatrixXd ab_design(const std::vector<SymbolSample>& samples);
/// Least-squares solve for (lambda + B, 2 mu + A/2) followed by subtraction of the known lambda, 2 mu.
ABRecovery recover_AB(double lambda, double mu, const std::vector<SymbolSample>& samples, double max_condition = 1e6);

/// Weights w = det(Y)^{-1/2} along one P geodesic for a family of initial Hessians (Y0 = I).
struct WeightMember {
  Matrix3cd H0;
  RiccatiPath path;
  std::vector<cplx> weight;  // per node
};

class WeightFamily {
 public:
  WeightFamily(std::shared_ptr<FermiChart> chart, double tau_lo, double tau_hi, std::vector<Matrix3cd> H0s,
               double step = 1e-3);

  /// iσI for σ in {1/4, 1/2, 1, 2, 4} and i diag(1, σ, 1/σ) for σ in {1/4, 1/2, 2, 4}.
  static std::vector<Matrix3cd> default_hessians();

  const FermiChart& chart() const noexcept { return *chart_; }
  std::shared_ptr<FermiChart> chart_ptr() const noexcept { return chart_; }
  std::size_t size() const noexcept { return members_.size(); }
  const WeightMember& member(std::size_t i) const { return members_.at(i); }
  const std::vector<double>& tau() const noexcept { return tau_; }
  double step() const noexcept { return step_; }
  /// Axis point at node k.
  Eigen::Vector3d point(std::size_t k) const;
  /// Samples of a field along the axis nodes.
  std::vector<double> sample(const FieldExpr& f) const;

  /// Transverse block of Y (rows and columns y2, y3) at node k of member i.
  Eigen::Matrix2cd reduced_Y(std::size_t i, std::size_t k) const;
  /// Largest residual of d^2 Yr / dtau^2 + 2 Dr Yr = 0 at interior nodes (central differences).
  double reduced_ode_residual(std::size_t i) const;
  /// Largest |det Y - Y11 det Yr| / |det Y| over the nodes of member i.
  double block_determinant_residual(std::size_t i) const;

 private:
  std::shared_ptr<FermiChart> chart_;
  double step_;
  std::vector<double> tau_;
  std::vector<WeightMember> members_;
};

/// Composite Simpson integral in tau of f * w for every member; f sampled on the family nodes.
std::vector<cplx> weighted_ray_transform(const std::vector<double>& f, const WeightFamily& family);

/// Transform data of one geodesic through x0 (at tau = 0).
struct GeodesicData {
  std::shared_ptr<const WeightFamily> family;
  std::vector<cplx> values;
};

struct CRecoveryOptions {
  /// Spacing of the hat basis in tau.
  double basis_spacing = 0.05;
  /// Data error level relative to the data norm, used by the discrepancy principle.
  double noise = 1e-6;
  double discrepancy_factor = 1.5;
  double max_condition = 1e12;
};

struct CRecovery {
  double f0 = 0.0;  // recovered f at x0
  double C = 0.0;   // f0 * cP^{9/2} rho^{3/2}
  double alpha = 0.0;
  double residual = 0.0;
  double target = 0.0;
  double condition = 0.0;
  /// Per geodesic: basis nodes and recovered f.
  std::vector<std::vector<double>> tau, f;
};

/// Joint Tikhonov inversion of the transforms along a fan of geodesics through x0 sharing the value at x0.
CRecovery recover_C_at_point(const MaterialModel& m, const Eigen::Vector3d& x0, const std::vector<GeodesicData>& data,
                             const CRecoveryOptions& opt = {});

/// Transform integrand for the quadratic modulus C: C cP^{-9/2} rho^{-3/2}.
double c_integrand(const MaterialModel& m, const Eigen::Vector3d& x);

/// Transverse stationary-phase profile of the C term along a forward P beam.
struct TransverseLimit {
  std::vector<double> tau, varrho;
  std::vector<std::vector<cplx>> values;  // [varrho index][tau index]
  std::vector<cplx> extrapolated;         // Richardson in 1/varrho from the two largest values
  std::vector<cplx> model;                // C cP^{-9/2} rho^{-3/2} det(Y)^{-1/2} on the axis
  /// Constant fitted at tau = 0: extrapolated / model.
  cplx constant_at_centre() const;
  /// Largest |extrapolated - K model| / |K model| over tau.
  double profile_error(cplx K) const;
};

TransverseLimit c_transverse_limit(const GaussianBeam& beam, const std::vector<double>& tau,
                                   const std::vector<double>& varrho, int nodes = 12);
/// (pi/4)^{3/2} / (8 sqrt(c0)) with c0 = det(Im H) |det Y|^2.
double c_limit_constant(const RiccatiPath& path);

struct RecoveryReport {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  std::vector<ABRecovery> ab;
  std::vector<CRecovery> c;
  nlohmann::json inventory = nlohmann::json::object();
  nlohmann::json to_json() const;
};

/// CSV with columns member, Im H0 diagonal (h11, h22, h33), value_re, value_im.
void write_transform_table(std::ostream& out, const WeightFamily& family, const std::vector<cplx>& values);

}  // namespace elastobeam
