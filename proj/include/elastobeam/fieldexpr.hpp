#pragma once

// Scalar field expressions over (x1, x2, x3) with exact symbolic first and
// second derivatives. The grammar is documented in docs/fieldexpr.md.

#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace elastobeam {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownIdentifier, Arity };
  ParseError(Kind kind, std::size_t offset, const std::string& what);
  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

/// Raised when an expression is evaluated outside its mathematical domain
/// (division by zero, square root of a negative number).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Tanh, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int index = 0;       // Var: 0..2, Pow: integer exponent
  NodePtr lhs;         // unary operand / left operand
  NodePtr rhs;

  static NodePtr constant(double v);
  static NodePtr variable(int i);
  static NodePtr unary(Op op, NodePtr a);
  static NodePtr binary(Op op, NodePtr a, NodePtr b);
  static NodePtr power(NodePtr base, int exponent);
};

bool equal(const Node& a, const Node& b);
std::string print(const Node& n);

/// d/dx_var with constant folding only.
NodePtr differentiate(const NodePtr& n, int var);

}  // namespace expr

struct FieldSample {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

class FieldExpr {
 public:
  static FieldExpr parse(std::string_view source);
  static FieldExpr constant(double v);

  const std::string& source() const noexcept { return source_; }
  const expr::NodePtr& ast() const noexcept { return ast_; }
  std::string print() const { return expr::print(*ast_); }
  bool is_constant() const noexcept;

  double eval(const Eigen::Vector3d& x) const;
  /// Value and gradient only.
  FieldSample eval_grad(const Eigen::Vector3d& x) const;
  FieldSample eval_with_derivatives(const Eigen::Vector3d& x) const;

 private:
  // Flat instruction tape: every slot is computed once from earlier slots.
  struct Instr {
    expr::Op op;
    int a = -1;
    int b = -1;
    int k = 0;
    double c = 0.0;
  };
  struct Tape {
    std::vector<Instr> code;
    std::vector<int> outputs;
    void run_all(const Eigen::Vector3d& x, std::vector<double>& slots) const;
  };

  FieldExpr() = default;
  void compile();

  std::string source_;
  expr::NodePtr ast_;
  // value, then d/dx_i, then d2/dx_i dx_j for i <= j (00,01,02,11,12,22)
  std::array<expr::NodePtr, 10> derivs_;
  Tape tape0_;  // value
  Tape tape1_;  // value + gradient
  Tape tape2_;  // all ten
};

}  // namespace elastobeam
