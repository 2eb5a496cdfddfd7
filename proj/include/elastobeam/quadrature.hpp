#pragma once

#include <vector>

namespace elastobeam {

struct QuadratureRule {
  std::vector<double> nodes, weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);
/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int n);
/// Composite Simpson rule on [a, b] with an even number of panels.
QuadratureRule simpson(int panels, double a, double b);

}  // namespace elastobeam
