#include "elastobeam/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace elastobeam {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights mu0 * v0^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = offdiag[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    q.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    q.weights[static_cast<std::size_t>(i)] = mu0 * v * v;
  }
  // Symmetrize to remove round-off asymmetry.
  for (std::size_t i = 0, j = q.nodes.size() - 1; i < j; ++i, --j) {
    const double x = 0.5 * (q.nodes[j] - q.nodes[i]);
    const double w = 0.5 * (q.weights[i] + q.weights[j]);
    q.nodes[i] = -x;
    q.nodes[j] = x;
    q.weights[i] = q.weights[j] = w;
  }
  if (q.nodes.size() % 2 == 1) q.nodes[q.nodes.size() / 2] = 0.0;
  return q;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  QuadratureRule q = golub_welsch(off, 2.0);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    q.nodes[i] = mid + half * q.nodes[i];
    q.weights[i] *= half;
  }
  return q;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
  return golub_welsch(off, std::sqrt(std::numbers::pi));
}

QuadratureRule simpson(int panels, double a, double b) {
  if (panels < 2 || panels % 2 != 0) throw std::invalid_argument("Simpson rule needs an even panel count");
  QuadratureRule q;
  const double h = (b - a) / panels;
  for (int i = 0; i <= panels; ++i) {
    q.nodes.push_back(a + i * h);
    const double c = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    q.weights.push_back(c * h / 3.0);
  }
  return q;
}

}  // namespace elastobeam
