#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "elastobeam/fieldexpr.hpp"

namespace elastobeam {

enum class WaveMode { P, S };

const char* to_string(WaveMode m) noexcept;

/// Axis-aligned box. `inner()` is the physical domain, the full box is the
/// computational extension on which all fields are defined.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d max = Eigen::Vector3d::Constant(1.0);
  double margin = 0.0;

  bool contains(const Eigen::Vector3d& x) const;
  bool contains_inner(const Eigen::Vector3d& x) const;
  Box inner() const;
};

struct SpeedSample {
  double c = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

struct ValidationReport {
  bool pass = true;
  double min_mu = 0.0;
  double min_bulk = 0.0;  // min of 3 lambda + 2 mu
  double min_rho = 0.0;
  double min_speed_gap = 0.0;  // min of c_P - c_S
  int grid_n = 0;
  std::string reason;  // empty on pass
  std::optional<Eigen::Vector3d> first_violation;
};

class MediumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MaterialModel {
 public:
  MaterialModel(Box box, FieldExpr lambda, FieldExpr mu, FieldExpr rho, FieldExpr a3, FieldExpr b3,
                FieldExpr c3);

  /// Medium file: {"box": {"min": [..], "max": [..], "margin": m},
  ///               "fields": {"lambda": "...", "mu": ..., "rho", "A", "B", "C"}}
  static MaterialModel from_json_text(const std::string& text);
  static MaterialModel load(const std::string& path);
  /// Constant-coefficient medium on a cube of half-width `half`.
  static MaterialModel homogeneous(double lambda, double mu, double rho, double a3 = 0.0,
                                   double b3 = 0.0, double c3 = 0.0, double half = 2.0,
                                   double margin = 0.5);
  std::string to_json_text() const;

  const Box& box() const noexcept { return box_; }
  const FieldExpr& lambda() const noexcept { return lambda_; }
  const FieldExpr& mu() const noexcept { return mu_; }
  const FieldExpr& rho() const noexcept { return rho_; }
  const FieldExpr& A() const noexcept { return a3_; }
  const FieldExpr& B() const noexcept { return b3_; }
  const FieldExpr& C() const noexcept { return c3_; }
  /// Wave modulus: lambda + 2 mu for P, mu for S.
  double modulus(WaveMode mode, const Eigen::Vector3d& x) const;
  bool homogeneous_fields() const noexcept { return homogeneous_; }

  SpeedSample wave_speed(WaveMode mode, const Eigen::Vector3d& x) const;
  /// Speed and gradient only (no Hessian).
  SpeedSample wave_speed_grad(WaveMode mode, const Eigen::Vector3d& x) const;
  double speed(WaveMode mode, const Eigen::Vector3d& x) const;
  /// g = c^{-2} times the Euclidean metric.
  Eigen::Matrix3d metric(WaveMode mode, const Eigen::Vector3d& x) const;

  ValidationReport validate(int grid_n = 33) const;

 private:
  Box box_;
  FieldExpr lambda_, mu_, rho_, a3_, b3_, c3_;
  bool homogeneous_ = false;
};

}  // namespace elastobeam
