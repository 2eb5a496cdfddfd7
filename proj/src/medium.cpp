#include "elastobeam/medium.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace elastobeam {

using Eigen::Matrix3d;
using Eigen::Vector3d;
using json = nlohmann::json;

const char* to_string(WaveMode m) noexcept { return m == WaveMode::P ? "P" : "S"; }

bool Box::contains(const Vector3d& x) const {
  return (x.array() >= min.array()).all() && (x.array() <= max.array()).all();
}

Box Box::inner() const {
  Box b;
  b.min = min.array() + margin;
  b.max = max.array() - margin;
  b.margin = 0.0;
  return b;
}

bool Box::contains_inner(const Vector3d& x) const { return inner().contains(x); }

MaterialModel::MaterialModel(Box box, FieldExpr lambda, FieldExpr mu, FieldExpr rho, FieldExpr a3,
                             FieldExpr b3, FieldExpr c3)
    : box_(std::move(box)),
      lambda_(std::move(lambda)),
      mu_(std::move(mu)),
      rho_(std::move(rho)),
      a3_(std::move(a3)),
      b3_(std::move(b3)),
      c3_(std::move(c3)) {
  if (!((box_.max - box_.min).array() > 2.0 * box_.margin).all() || box_.margin < 0.0) {
    throw MediumError("box margin leaves an empty physical domain");
  }
  homogeneous_ = lambda_.is_constant() && mu_.is_constant() && rho_.is_constant();
}

namespace {

Vector3d read_vec3(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3) {
    throw MediumError(std::string("box.") + key + " must be an array of 3 numbers");
  }
  return {j.at(key)[0].get<double>(), j.at(key)[1].get<double>(), j.at(key)[2].get<double>()};
}

FieldExpr read_field(const json& fields, const char* key) {
  if (!fields.contains(key)) throw MediumError(std::string("missing field '") + key + "'");
  const auto& v = fields.at(key);
  if (v.is_number()) return FieldExpr::constant(v.get<double>());
  if (!v.is_string()) throw MediumError(std::string("field '") + key + "' must be a string");
  try {
    return FieldExpr::parse(v.get<std::string>());
  } catch (const ParseError& e) {
    throw MediumError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

MaterialModel MaterialModel::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MediumError(std::string("medium file is not valid JSON: ") + e.what());
  }
  if (!j.contains("box") || !j.contains("fields")) throw MediumError("medium needs 'box' and 'fields'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "box" && it.key() != "fields") throw MediumError("unknown key '" + it.key() + "'");
  }
  const auto& jb = j.at("box");
  Box box;
  box.min = read_vec3(jb, "min");
  box.max = read_vec3(jb, "max");
  box.margin = jb.value("margin", 0.0);
  const auto& f = j.at("fields");
  return MaterialModel(box, read_field(f, "lambda"), read_field(f, "mu"), read_field(f, "rho"),
                       read_field(f, "A"), read_field(f, "B"), read_field(f, "C"));
}

MaterialModel MaterialModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MediumError("cannot open medium file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

MaterialModel MaterialModel::homogeneous(double lambda, double mu, double rho, double a3, double b3,
                                         double c3, double half, double margin) {
  Box box;
  box.min = Vector3d::Constant(-half);
  box.max = Vector3d::Constant(half);
  box.margin = margin;
  return MaterialModel(box, FieldExpr::constant(lambda), FieldExpr::constant(mu),
                       FieldExpr::constant(rho), FieldExpr::constant(a3), FieldExpr::constant(b3),
                       FieldExpr::constant(c3));
}

std::string MaterialModel::to_json_text() const {
  json j;
  j["box"] = {{"min", {box_.min[0], box_.min[1], box_.min[2]}},
              {"max", {box_.max[0], box_.max[1], box_.max[2]}},
              {"margin", box_.margin}};
  j["fields"] = {{"lambda", lambda_.print()}, {"mu", mu_.print()}, {"rho", rho_.print()},
                 {"A", a3_.print()},          {"B", b3_.print()},   {"C", c3_.print()}};
  return j.dump(2);
}

double MaterialModel::modulus(WaveMode mode, const Vector3d& x) const {
  return mode == WaveMode::P ? lambda_.eval(x) + 2.0 * mu_.eval(x) : mu_.eval(x);
}

namespace {

// c = sqrt(M / rho) and its derivatives from those of M and rho.
SpeedSample compose_speed(const FieldSample& m, const FieldSample& r, bool with_hessian) {
  SpeedSample out;
  if (r.value <= 0.0 || m.value <= 0.0) throw DomainError("non-positive modulus or density");
  const double q = m.value / r.value;
  const Vector3d gq = (m.grad * r.value - m.value * r.grad) / (r.value * r.value);
  out.c = std::sqrt(q);
  out.grad = gq / (2.0 * out.c);
  if (with_hessian) {
    const double r2 = r.value * r.value;
    const Matrix3d hq = m.hess / r.value - (m.grad * r.grad.transpose() + r.grad * m.grad.transpose()) / r2 +
                        m.value * (2.0 * r.grad * r.grad.transpose() / (r2 * r.value) - r.hess / r2);
    out.hess = hq / (2.0 * out.c) - gq * gq.transpose() / (4.0 * out.c * out.c * out.c);
    out.hess = 0.5 * (out.hess + out.hess.transpose()).eval();
  }
  return out;
}

}  // namespace

SpeedSample MaterialModel::wave_speed(WaveMode mode, const Vector3d& x) const {
  FieldSample m = mu_.eval_with_derivatives(x);
  if (mode == WaveMode::P) {
    const FieldSample l = lambda_.eval_with_derivatives(x);
    m.value = l.value + 2.0 * m.value;
    m.grad = l.grad + 2.0 * m.grad;
    m.hess = l.hess + 2.0 * m.hess;
  }
  return compose_speed(m, rho_.eval_with_derivatives(x), true);
}

SpeedSample MaterialModel::wave_speed_grad(WaveMode mode, const Vector3d& x) const {
  FieldSample m = mu_.eval_grad(x);
  if (mode == WaveMode::P) {
    const FieldSample l = lambda_.eval_grad(x);
    m.value = l.value + 2.0 * m.value;
    m.grad = l.grad + 2.0 * m.grad;
  }
  return compose_speed(m, rho_.eval_grad(x), false);
}

double MaterialModel::speed(WaveMode mode, const Vector3d& x) const {
  const double m = modulus(mode, x);
  const double r = rho_.eval(x);
  if (r <= 0.0 || m <= 0.0) throw DomainError("non-positive modulus or density");
  return std::sqrt(m / r);
}

Matrix3d MaterialModel::metric(WaveMode mode, const Vector3d& x) const {
  const double c = speed(mode, x);
  return Matrix3d::Identity() / (c * c);
}

ValidationReport MaterialModel::validate(int grid_n) const {
  if (grid_n < 2) throw MediumError("validation grid needs at least 2 points per axis");
  ValidationReport rep;
  rep.grid_n = grid_n;
  rep.min_mu = rep.min_bulk = rep.min_rho = rep.min_speed_gap = std::numeric_limits<double>::infinity();
  auto fail = [&rep](const Vector3d& x, std::string why) {
    if (rep.pass) {
      rep.pass = false;
      rep.reason = std::move(why);
      rep.first_violation = x;
    }
  };
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      for (int k = 0; k < grid_n; ++k) {
        const Vector3d f(double(i) / (grid_n - 1), double(j) / (grid_n - 1), double(k) / (grid_n - 1));
        const Vector3d x = box_.min.array() + f.array() * (box_.max - box_.min).array();
        double l = 0.0, m = 0.0, r = 0.0;
        try {
          l = lambda_.eval(x);
          m = mu_.eval(x);
          r = rho_.eval(x);
          a3_.eval(x);
          b3_.eval(x);
          c3_.eval(x);
        } catch (const DomainError& e) {
          fail(x, std::string("domain error: ") + e.what());
          continue;
        }
        rep.min_mu = std::min(rep.min_mu, m);
        rep.min_bulk = std::min(rep.min_bulk, 3.0 * l + 2.0 * m);
        rep.min_rho = std::min(rep.min_rho, r);
        if (m <= 0.0) {
          fail(x, "μ ≤ 0");
          continue;
        }
        if (3.0 * l + 2.0 * m <= 0.0) {
          fail(x, "3λ+2μ ≤ 0");
          continue;
        }
        if (r <= 0.0) {
          fail(x, "ρ ≤ 0");
          continue;
        }
        const double gap = std::sqrt((l + 2.0 * m) / r) - std::sqrt(m / r);
        rep.min_speed_gap = std::min(rep.min_speed_gap, gap);
        if (gap <= 0.0) fail(x, "c_P ≤ c_S");
      }
    }
  }
  return rep;
}

}  // namespace elastobeam
