#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "elastobeam/parallel.hpp"
#include "elastobeam/quadrature.hpp"
#include "elastobeam/recovery.hpp"

namespace elastobeam {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

std::vector<double> basis_nodes(double lo, double hi, double h) {
  std::vector<double> nodes{lo};
  for (long k = static_cast<long>(std::ceil(lo / h)); double(k) * h < hi; ++k) {
    const double t = double(k) * h;
    if (t - lo > 0.5 * h && hi - t > 0.5 * h) nodes.push_back(t);
    if (k == 0 && std::find(nodes.begin(), nodes.end(), 0.0) == nodes.end()) nodes.push_back(0.0);
  }
  nodes.push_back(hi);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

double hat(const std::vector<double>& nodes, std::size_t j, double t) {
  const double c = nodes[j];
  if (t == c) return 1.0;
  if (t < c) return j == 0 ? 0.0 : std::max(0.0, (t - nodes[j - 1]) / (c - nodes[j - 1]));
  return j + 1 == nodes.size() ? 0.0 : std::max(0.0, (nodes[j + 1] - t) / (nodes[j + 1] - c));
}

}  // namespace

CRecovery recover_C_at_point(const MaterialModel& m, const Vector3d& x0, const std::vector<GeodesicData>& data,
                             const CRecoveryOptions& opt) {
  if (data.empty()) throw RecoveryError("no geodesic data given");
  if (!(opt.basis_spacing > 0.0) || !(opt.noise >= 0.0)) throw RecoveryError("invalid recovery options");
  CRecovery out;
  // Global unknown 0 is the shared value at x0; the others are per-geodesic nodes.
  std::vector<std::vector<Eigen::Index>> index;
  Eigen::Index nu = 1;
  std::size_t rows = 0;
  for (const GeodesicData& g : data) {
    if (!g.family) throw RecoveryError("geodesic data without a weight family");
    if (g.family->size() < 8) throw RecoveryError("weight family needs at least eight members per geodesic");
    if (g.values.size() != g.family->size()) throw RecoveryError("transform values do not match the weight family");
    const std::vector<double>& tau = g.family->tau();
    if (tau.front() > 0.0 || tau.back() < 0.0) throw RecoveryError("geodesic does not pass through the point");
    if ((g.family->point(static_cast<std::size_t>(std::lround(-tau.front() / g.family->step()))) - x0).norm() > 1e-6) {
      throw RecoveryError("geodesic does not pass through the point");
    }
    out.tau.push_back(basis_nodes(tau.front(), tau.back(), opt.basis_spacing));
    std::vector<Eigen::Index> idx;
    for (double t : out.tau.back()) idx.push_back(t == 0.0 ? 0 : nu++);
    index.push_back(std::move(idx));
    rows += 2 * g.values.size();
  }

  MatrixXd A = MatrixXd::Zero(static_cast<Eigen::Index>(rows), nu);
  VectorXd d(static_cast<Eigen::Index>(rows));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> diffs;
  std::vector<double> diff_scale;
  Eigen::Index row = 0;
  for (std::size_t g = 0; g < data.size(); ++g) {
    const WeightFamily& fam = *data[g].family;
    const std::vector<double>& nodes = out.tau[g];
    std::vector<cplx> cols(nodes.size() * fam.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      std::vector<double> phi(fam.tau().size());
      for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = hat(nodes, j, fam.tau()[k]);
      const std::vector<cplx> t = weighted_ray_transform(phi, fam);
      for (std::size_t i = 0; i < fam.size(); ++i) cols[i * nodes.size() + j] = t[i];
    }
    for (std::size_t i = 0; i < fam.size(); ++i) {
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        A(row, index[g][j]) += cols[i * nodes.size() + j].real();
        A(row + 1, index[g][j]) += cols[i * nodes.size() + j].imag();
      }
      d[row] = data[g].values[i].real();
      d[row + 1] = data[g].values[i].imag();
      row += 2;
    }
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
      diffs.emplace_back(index[g][j], index[g][j + 1]);
      diff_scale.push_back(1.0 / (nodes[j + 1] - nodes[j]));
    }
  }
  MatrixXd L = MatrixXd::Zero(static_cast<Eigen::Index>(diffs.size()), nu);
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(k);
    L(r, diffs[k].first) = -diff_scale[k];
    L(r, diffs[k].second) = diff_scale[k];
  }

  const double scale = A.squaredNorm() / std::max(L.squaredNorm(), 1e-300);
  auto solve = [&](double alpha) -> VectorXd {
    MatrixXd S(A.rows() + L.rows(), nu);
    S << A, std::sqrt(alpha) * L;
    VectorXd rhs = VectorXd::Zero(S.rows());
    rhs.head(A.rows()) = d;
    return S.colPivHouseholderQr().solve(rhs);
  };
  auto residual = [&](const VectorXd& f) { return (A * f - d).norm(); };

  out.target = opt.discrepancy_factor * opt.noise * d.norm();
  double lo = 1e-14 * scale, hi = 1e6 * scale;
  VectorXd f = solve(hi);
  out.alpha = hi;
  if (residual(f) > out.target) {
    // Residual grows with alpha; bisect in log alpha for the discrepancy level.
    VectorXd flo = solve(lo);
    if (residual(flo) >= out.target) {
      f = flo;
      out.alpha = lo;
    } else {
      for (int it = 0; it < 60; ++it) {
        const double mid = std::sqrt(lo * hi);
        const VectorXd fm = solve(mid);
        if (residual(fm) > out.target) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
        if (hi / lo < 1.0 + 1e-3) break;
      }
      f = flo;
      out.alpha = lo;
    }
  }
  MatrixXd S(A.rows() + L.rows(), nu);
  S << A, std::sqrt(out.alpha) * L;
  Eigen::JacobiSVD<MatrixXd> svd(S);
  const VectorXd& sv = svd.singularValues();
  out.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(out.condition <= opt.max_condition)) {
    throw RecoveryError("regularized system is ill-conditioned; enlarge the weight family");
  }
  out.residual = residual(f);
  for (std::size_t g = 0; g < data.size(); ++g) {
    std::vector<double> fg;
    for (Eigen::Index i : index[g]) fg.push_back(f[i]);
    out.f.push_back(std::move(fg));
  }
  out.f0 = f[0];
  out.C = out.f0 * std::pow(m.speed(WaveMode::P, x0), 4.5) * std::pow(m.rho().eval(x0), 1.5);
  return out;
}

double c_limit_constant(const RiccatiPath& path) {
  const std::size_t k0 = static_cast<std::size_t>(std::lround(-path.tau_first() / path.step()));
  return std::pow(std::numbers::pi / 4.0, 1.5) / (8.0 * std::sqrt(path.invariant(k0)));
}

cplx TransverseLimit::constant_at_centre() const {
  const auto it = std::min_element(tau.begin(), tau.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const std::size_t k = static_cast<std::size_t>(it - tau.begin());
  return extrapolated.at(k) / model.at(k);
}

double TransverseLimit::profile_error(cplx K) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    worst = std::max(worst, std::abs(extrapolated[k] - K * model[k]) / std::abs(K * model[k]));
  }
  return worst;
}

TransverseLimit c_transverse_limit(const GaussianBeam& beam, const std::vector<double>& tau,
                                   const std::vector<double>& varrho, int nodes) {
  if (beam.mode() != WaveMode::P || beam.options().pol != Polarization::P) {
    throw RecoveryError("the transverse limit uses a forward P beam");
  }
  const FermiChart& chart = beam.chart();
  if (!chart.has_cache()) throw RecoveryError("the beam chart needs a cached forward map");
  if (tau.empty() || varrho.empty()) throw RecoveryError("empty tau or frequency list");
  const MaterialModel& m = chart.medium();
  const QuadratureRule gh = gauss_hermite(nodes);
  const std::size_t n = gh.nodes.size();

  TransverseLimit out;
  out.tau = tau;
  out.varrho = varrho;
  std::sort(out.varrho.begin(), out.varrho.end());
  out.values.assign(out.varrho.size(), std::vector<cplx>(tau.size()));
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double tk = tau[k];
    if (tk < beam.riccati().tau_first() || tk > beam.riccati().tau_last()) {
      throw RecoveryError("tau outside the beam interval");
    }
    const Vector3d xa = chart.axis_state(tk / kSqrt2).x;
    out.model.push_back(c_integrand(m, xa) / beam.riccati().sqrt_det_Y_at(tk));
    Eigen::Matrix3d im = beam.riccati().H_at(tk).imag();
    im = 0.5 * (im + im.transpose()).eval();
    Eigen::LLT<Eigen::Matrix3d> llt(im);
    if (llt.info() != Eigen::Success) throw RecoveryError("Im H is not positive definite");
    const Eigen::Matrix3d Minv = llt.matrixL().transpose().toDenseMatrix().inverse();
    const double detL = llt.matrixL().toDenseMatrix().determinant();
    for (std::size_t r = 0; r < out.varrho.size(); ++r) {
      const double vr = out.varrho[r];
      const double sc = 1.0 / (2.0 * std::sqrt(vr));
      std::vector<cplx> part(n * n);
      parallel_for(part.size(), [&](std::size_t idx) {
        const std::size_t a = idx / n, b = idx % n;
        cplx acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          const Vector3d z = sc * Minv * Vector3d(gh.nodes[a], gh.nodes[b], gh.nodes[c]);
          const Vector3d sy((tk + z[0]) / kSqrt2, z[1], z[2]);
          const double tp = (tk - z[0]) / kSqrt2;
          Eigen::Matrix3d J;
          const Vector3d x = chart.forward_cached(sy, &J);
          BeamSample s;
          if (!beam.sample_at(tp, sy, J.transpose().inverse(), s) || s.cutoff == 0.0) continue;
          const cplx ga = s.grad_x.cwiseProduct(s.amp).sum();
          const double cp = m.speed(WaveMode::P, x);
          acc += gh.weights[c] * m.C().eval(x) * std::pow(s.cutoff, 3) * ga * ga * std::conj(ga) * cp * cp * cp;
        }
        part[idx] = gh.weights[a] * gh.weights[b] * acc;
      });
      cplx total = 0.0;
      for (const cplx& p : part) total += p;
      out.values[r][k] = std::pow(vr, 1.5) * total * sc * sc * sc / detL;
    }
  }
  const std::size_t nr = out.varrho.size();
  for (std::size_t k = 0; k < tau.size(); ++k) {
    if (nr < 2) {
      out.extrapolated.push_back(out.values[0][k]);
      continue;
    }
    const double ra = out.varrho[nr - 2], rb = out.varrho[nr - 1];
    out.extrapolated.push_back((rb * out.values[nr - 1][k] - ra * out.values[nr - 2][k]) / (rb - ra));
  }
  return out;
}

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j;
  j["point"] = {point[0], point[1], point[2]};
  j["ab"] = nlohmann::json::array();
  for (const ABRecovery& r : ab) {
    j["ab"].push_back({{"lambda_plus_B", r.lambda_plus_B},
                       {"two_mu_plus_A_half", r.two_mu_plus_A_half},
                       {"A", r.A},
                       {"B", r.B},
                       {"residual", r.residual},
                       {"condition", r.condition}});
  }
  j["C"] = nlohmann::json::array();
  for (const CRecovery& r : c) {
    j["C"].push_back({{"f0", r.f0},
                      {"C", r.C},
                      {"alpha", r.alpha},
                      {"residual", r.residual},
                      {"target", r.target},
                      {"condition", r.condition},
                      {"geodesics", r.f.size()}});
  }
  j["inventory"] = inventory;
  return j;
}

}  // namespace elastobeam
