#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "elastobeam/recovery.hpp"

namespace elastobeam {

using Eigen::Vector3d;

Eigen::MatrixXd ab_design(const std::vector<SymbolSample>& samples) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CovectorTriple& tr = samples[i].triple;
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    X(r, 0) = tr.xi[2].dot(tr.xi[0]);
    X(r, 1) = tr.xi[1].dot(tr.xi[2]) * tr.xi[1].dot(tr.xi[0]);
  }
  return X;
}

ABRecovery recover_AB(double lambda, double mu, const std::vector<SymbolSample>& samples, double max_condition) {
  if (samples.size() < 2) throw RecoveryError("at least two symbol samples are needed");
  const Eigen::MatrixXd X = ab_design(samples);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  ABRecovery r;
  r.condition = sv[1] > 0.0 ? sv[0] / sv[1] : std::numeric_limits<double>::infinity();
  if (!(r.condition <= max_condition)) throw RecoveryError("configurations are rank deficient for the (A, B) design");
  Eigen::VectorXd re(X.rows()), im(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    re[i] = samples[static_cast<std::size_t>(i)].value.real();
    im[i] = samples[static_cast<std::size_t>(i)].value.imag();
  }
  const Eigen::Vector2d p = svd.solve(re);
  r.lambda_plus_B = p[0];
  r.two_mu_plus_A_half = p[1];
  r.B = p[0] - lambda;
  r.A = 2.0 * (p[1] - 2.0 * mu);
  r.residual = std::sqrt((X * p - re).squaredNorm() + im.squaredNorm());
  return r;
}

WeightFamily::WeightFamily(std::shared_ptr<FermiChart> chart, double tau_lo, double tau_hi, std::vector<Matrix3cd> H0s,
                           double step)
    : chart_(std::move(chart)), step_(step) {
  if (H0s.empty()) throw RecoveryError("weight family is empty");
  chart_->prepare_axis(tau_lo, tau_hi);
  for (const Matrix3cd& H0 : H0s) {
    WeightMember m{H0, solve_riccati(*chart_, H0, Matrix3cd::Identity(), tau_lo, tau_hi, step), {}};
    m.weight.resize(m.path.size());
    for (std::size_t k = 0; k < m.path.size(); ++k) m.weight[k] = 1.0 / m.path.sqrt_det_Y(k);
    members_.push_back(std::move(m));
  }
  const RiccatiPath& p = members_.front().path;
  for (std::size_t k = 0; k < p.size(); ++k) tau_.push_back(p.tau_at(k));
}

std::vector<Matrix3cd> WeightFamily::default_hessians() {
  const cplx i(0.0, 1.0);
  std::vector<Matrix3cd> out;
  for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) out.push_back(i * s * Matrix3cd::Identity());
  for (double s : {0.25, 0.5, 2.0, 4.0}) {
    Matrix3cd H = Matrix3cd::Zero();
    H.diagonal() << i, i * s, i / s;
    out.push_back(H);
  }
  return out;
}

Vector3d WeightFamily::point(std::size_t k) const { return chart_->axis_state(tau_.at(k) / std::numbers::sqrt2).x; }

std::vector<double> WeightFamily::sample(const FieldExpr& f) const {
  std::vector<double> out(tau_.size());
  for (std::size_t k = 0; k < tau_.size(); ++k) out[k] = f.eval(point(k));
  return out;
}

Eigen::Matrix2cd WeightFamily::reduced_Y(std::size_t i, std::size_t k) const {
  return member(i).path.Y(k).block<2, 2>(1, 1);
}

double WeightFamily::reduced_ode_residual(std::size_t i) const {
  double worst = 0.0;
  const double h2 = step_ * step_;
  for (std::size_t k = 1; k + 1 < tau_.size(); ++k) {
    const Eigen::Matrix2cd dd = (reduced_Y(i, k + 1) - 2.0 * reduced_Y(i, k) + reduced_Y(i, k - 1)) / h2;
    const Eigen::Matrix2d Dr = chart_->D(tau_[k]).block<2, 2>(1, 1);
    worst = std::max(worst, (dd + 2.0 * Dr.cast<cplx>() * reduced_Y(i, k)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double WeightFamily::block_determinant_residual(std::size_t i) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < tau_.size(); ++k) {
    const Matrix3cd& Y = member(i).path.Y(k);
    const cplx d = Y.determinant();
    worst = std::max(worst, std::abs(d - Y(0, 0) * reduced_Y(i, k).determinant()) / std::abs(d));
  }
  return worst;
}

std::vector<cplx> weighted_ray_transform(const std::vector<double>& f, const WeightFamily& family) {
  const std::size_t n = family.tau().size();
  if (f.size() != n) throw RecoveryError("field samples do not match the weight family grid");
  if (n < 4) throw RecoveryError("weight family grid is too short");
  const double h = family.step();
  // Simpson weights, with a 3/8 rule on the last three panels for an odd panel count.
  std::vector<double> q(n, 0.0);
  const std::size_t panels = n - 1;
  const std::size_t simpson_panels = panels % 2 == 0 ? panels : panels - 3;
  for (std::size_t k = 0; k < simpson_panels; k += 2) {
    q[k] += h / 3.0;
    q[k + 1] += 4.0 * h / 3.0;
    q[k + 2] += h / 3.0;
  }
  if (simpson_panels != panels) {
    const std::size_t k = simpson_panels;
    q[k] += 3.0 * h / 8.0;
    q[k + 1] += 9.0 * h / 8.0;
    q[k + 2] += 9.0 * h / 8.0;
    q[k + 3] += 3.0 * h / 8.0;
  }
  std::vector<cplx> out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += q[k] * f[k] * family.member(i).weight[k];
    out.push_back(s);
  }
  return out;
}

double c_integrand(const MaterialModel& m, const Vector3d& x) {
  return m.C().eval(x) * std::pow(m.speed(WaveMode::P, x), -4.5) * std::pow(m.rho().eval(x), -1.5);
}

void write_transform_table(std::ostream& out, const WeightFamily& family, const std::vector<cplx>& values) {
  if (values.size() != family.size()) throw RecoveryError("transform values do not match the weight family");
  out << "member,h11,h22,h33,value_re,value_im\n";
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Matrix3cd& H = family.member(i).H0;
    out << i << ',' << H(0, 0).imag() << ',' << H(1, 1).imag() << ',' << H(2, 2).imag() << ',' << values[i].real()
        << ',' << values[i].imag() << '\n';
  }
}

}  // namespace elastobeam
