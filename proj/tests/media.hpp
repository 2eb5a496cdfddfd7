#pragma once

#include <random>
#include <string>

#include "elastobeam/medium.hpp"

namespace testmedia {

inline elastobeam::MaterialModel make(const std::string& lambda, const std::string& mu, const std::string& rho,
                                      double half = 1.5, double margin = 0.25, const std::string& a = "0",
                                      const std::string& b = "0", const std::string& c = "0") {
  using elastobeam::FieldExpr;
  elastobeam::Box box;
  box.min = Eigen::Vector3d::Constant(-half);
  box.max = Eigen::Vector3d::Constant(half);
  box.margin = margin;
  return elastobeam::MaterialModel(box, FieldExpr::parse(lambda), FieldExpr::parse(mu), FieldExpr::parse(rho),
                                   FieldExpr::parse(a), FieldExpr::parse(b), FieldExpr::parse(c));
}

/// Smooth medium with gradients of a few percent per unit length in every field.
inline elastobeam::MaterialModel smooth() {
  return make("2 + 0.2*sin(x1 + 0.5*x2)", "1 + 0.1*cos(x2 - 0.7*x3)", "1 + 0.1*x3^2 + 0.05*x1");
}

/// Random smooth medium drawn from a small family of trigonometric perturbations.
inline elastobeam::MaterialModel random_smooth(std::mt19937& rng, double half = 1.5, double margin = 0.25) {
  std::uniform_real_distribution<double> amp(0.03, 0.15), k(-1.2, 1.2);
  auto wave = [&](double base) {
    return std::to_string(base) + " + " + std::to_string(base * amp(rng)) + "*sin(" + std::to_string(k(rng)) +
           "*x1 + " + std::to_string(k(rng)) + "*x2 + " + std::to_string(k(rng)) + "*x3 + " +
           std::to_string(k(rng)) + ")";
  };
  return make(wave(2.0), wave(1.0), wave(1.0), half, margin);
}

}  // namespace testmedia
