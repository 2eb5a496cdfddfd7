#include "elastobeam/fieldexpr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace elastobeam {

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

namespace expr {

NodePtr Node::constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr Node::variable(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = i;
  return n;
}

NodePtr Node::unary(Op op, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

NodePtr Node::binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr Node::power(NodePtr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->index = exponent;
  n->lhs = std::move(base);
  return n;
}

bool equal(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Const:
      return a.value == b.value;
    case Op::Var:
      return a.index == b.index;
    case Op::Pow:
      return a.index == b.index && equal(*a.lhs, *b.lhs);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    default:
      return equal(*a.lhs, *b.lhs);
  }
}

namespace {

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Tanh: return "tanh";
    case Op::Sqrt: return "sqrt";
    default: return nullptr;
  }
}

// Binding strength used by the printer: 1 sum, 2 product, 3 unary minus,
// 4 power, 5 primary.
int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n.value < 0.0 ? 3 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string wrap(const Node& n, int min_prec) {
  std::string s = print(n);
  return precedence(n) < min_prec ? "(" + s + ")" : s;
}

}  // namespace

std::string print(const Node& n) {
  switch (n.op) {
    case Op::Const:
      return n.value < 0.0 ? "-" + format_number(-n.value) : format_number(n.value);
    case Op::Var:
      return "x" + std::to_string(n.index + 1);
    case Op::Add:
      return wrap(*n.lhs, 1) + " + " + wrap(*n.rhs, 2);
    case Op::Sub:
      return wrap(*n.lhs, 1) + " - " + wrap(*n.rhs, 2);
    case Op::Mul:
      return wrap(*n.lhs, 2) + "*" + wrap(*n.rhs, 3);
    case Op::Div:
      return wrap(*n.lhs, 2) + "/" + wrap(*n.rhs, 3);
    case Op::Neg:
      return "-" + wrap(*n.lhs, 3);
    case Op::Pow:
      return wrap(*n.lhs, 5) + "^" + std::to_string(n.index);
    default:
      return std::string(function_name(n.op)) + "(" + print(*n.lhs) + ")";
  }
}

namespace {

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::Const; }

NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Node::binary(Op::Add, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
  if (is_const(a)) return Node::constant(-a->value);
  if (a->op == Op::Neg) return a->lhs;
  return Node::unary(Op::Neg, std::move(a));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return Node::binary(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Node::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return Node::binary(Op::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return Node::constant(0.0);
  if (is_const(b, 1.0)) return a;
  if (is_const(a) && is_const(b) && b->value != 0.0) return Node::constant(a->value / b->value);
  return Node::binary(Op::Div, std::move(a), std::move(b));
}

NodePtr pow_int(NodePtr base, int k) {
  if (k == 0) return Node::constant(1.0);
  if (k == 1) return base;
  if (is_const(base)) {
    const double v = std::pow(base->value, k);
    if (std::isfinite(v)) return Node::constant(v);
  }
  return Node::power(std::move(base), k);
}

}  // namespace

NodePtr differentiate(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::Const:
      return Node::constant(0.0);
    case Op::Var:
      return Node::constant(n->index == var ? 1.0 : 0.0);
    case Op::Add:
      return add(differentiate(n->lhs, var), differentiate(n->rhs, var));
    case Op::Sub:
      return sub(differentiate(n->lhs, var), differentiate(n->rhs, var));
    case Op::Neg:
      return neg(differentiate(n->lhs, var));
    case Op::Mul:
      return add(mul(differentiate(n->lhs, var), n->rhs), mul(n->lhs, differentiate(n->rhs, var)));
    case Op::Div: {
      // (u'v - uv') / v^2
      auto du = differentiate(n->lhs, var);
      auto dv = differentiate(n->rhs, var);
      if (is_const(dv, 0.0)) return div(du, n->rhs);
      return div(sub(mul(du, n->rhs), mul(n->lhs, dv)), pow_int(n->rhs, 2));
    }
    case Op::Pow: {
      const int k = n->index;
      auto du = differentiate(n->lhs, var);
      return mul(mul(Node::constant(static_cast<double>(k)), pow_int(n->lhs, k - 1)), du);
    }
    case Op::Sin:
      return mul(Node::unary(Op::Cos, n->lhs), differentiate(n->lhs, var));
    case Op::Cos:
      return mul(neg(Node::unary(Op::Sin, n->lhs)), differentiate(n->lhs, var));
    case Op::Exp:
      return mul(n, differentiate(n->lhs, var));
    case Op::Tanh:
      // 1 - tanh^2
      return mul(sub(Node::constant(1.0), pow_int(n, 2)), differentiate(n->lhs, var));
    case Op::Sqrt:
      return div(differentiate(n->lhs, var), mul(Node::constant(2.0), n));
  }
  return Node::constant(0.0);
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError(ParseError::Kind::Syntax, pos_, "empty expression");
    auto n = parse_sum();
    skip();
    if (pos_ < s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ParseError::Kind::Syntax, pos_, "syntax error: " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= s_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Node::binary(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = Node::binary(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Node::binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Node::binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return Node::unary(Op::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept('^')) {
      skip();
      const std::size_t start = pos_;
      bool negative = false;
      if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
        negative = s_[pos_] == '-';
        ++pos_;
      }
      const std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) {
        pos_ = start;
        fail("exponent must be an integer literal");
      }
      if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E')) {
        fail("exponent must be an integer literal");
      }
      int k = 0;
      std::from_chars(s_.data() + digits, s_.data() + pos_, k);
      skip();
      if (pos_ < s_.size() && s_[pos_] == '^') fail("chained exponents need parentheses");
      return Node::power(base, negative ? -k : k);
    }
    return base;
  }

  NodePtr parse_primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = parse_sum();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (ec != std::errc() || ptr != s_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Node::constant(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string_view name = s_.substr(start, pos_ - start);
    if (name == "x1") return Node::variable(0);
    if (name == "x2") return Node::variable(1);
    if (name == "x3") return Node::variable(2);
    Op op;
    if (name == "sin") {
      op = Op::Sin;
    } else if (name == "cos") {
      op = Op::Cos;
    } else if (name == "exp") {
      op = Op::Exp;
    } else if (name == "tanh") {
      op = Op::Tanh;
    } else if (name == "sqrt") {
      op = Op::Sqrt;
    } else {
      throw ParseError(ParseError::Kind::UnknownIdentifier, start,
                       "unknown identifier '" + std::string(name) + "'");
    }
    if (!accept('(')) fail("expected '(' after function name");
    skip();
    if (pos_ < s_.size() && s_[pos_] == ')') {
      throw ParseError(ParseError::Kind::Arity, pos_,
                       std::string(name) + " expects 1 argument, got 0");
    }
    auto arg = parse_sum();
    int count = 1;
    while (accept(',')) {
      parse_sum();
      ++count;
    }
    if (count != 1) {
      throw ParseError(ParseError::Kind::Arity, start,
                       std::string(name) + " expects 1 argument, got " + std::to_string(count));
    }
    expect(')');
    return Node::unary(op, arg);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace
}  // namespace expr

using expr::Node;
using expr::NodePtr;
using expr::Op;

FieldExpr FieldExpr::parse(std::string_view source) {
  FieldExpr f;
  f.source_ = std::string(source);
  f.ast_ = expr::Parser(source).parse();
  f.compile();
  return f;
}

FieldExpr FieldExpr::constant(double v) {
  FieldExpr f;
  f.ast_ = Node::constant(v);
  f.source_ = expr::print(*f.ast_);
  f.compile();
  return f;
}

bool FieldExpr::is_constant() const noexcept {
  for (std::size_t i = 1; i < derivs_.size(); ++i) {
    if (!(derivs_[i]->op == Op::Const && derivs_[i]->value == 0.0)) return false;
  }
  return true;
}

namespace {

struct TapeBuilder {
  std::unordered_map<const Node*, int> slots;

  template <class Instr>
  int emit(const NodePtr& n, std::vector<Instr>& code) {
    if (auto it = slots.find(n.get()); it != slots.end()) return it->second;
    Instr in{n->op};
    switch (n->op) {
      case Op::Const:
        in.c = n->value;
        break;
      case Op::Var:
        in.k = n->index;
        break;
      case Op::Pow:
        in.k = n->index;
        in.a = emit(n->lhs, code);
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
        in.a = emit(n->lhs, code);
        in.b = emit(n->rhs, code);
        break;
      default:
        in.a = emit(n->lhs, code);
        break;
    }
    code.push_back(in);
    const int slot = static_cast<int>(code.size()) - 1;
    slots.emplace(n.get(), slot);
    return slot;
  }
};

}  // namespace

void FieldExpr::compile() {
  derivs_[0] = ast_;
  std::array<NodePtr, 3> d1;
  for (int i = 0; i < 3; ++i) {
    d1[i] = expr::differentiate(ast_, i);
    derivs_[1 + i] = d1[i];
  }
  int k = 4;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) derivs_[k++] = expr::differentiate(d1[i], j);
  }
  auto build = [this](Tape& tape, std::size_t count) {
    TapeBuilder b;
    tape.code.clear();
    tape.outputs.clear();
    for (std::size_t i = 0; i < count; ++i) tape.outputs.push_back(b.emit(derivs_[i], tape.code));
  };
  build(tape0_, 1);
  build(tape1_, 4);
  build(tape2_, 10);
}

namespace {

inline double ipow(double x, int k) {
  if (k < 0) {
    if (x == 0.0) throw DomainError("negative power of zero");
    return 1.0 / ipow(x, -k);
  }
  double r = 1.0;
  double b = x;
  while (k) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

}  // namespace

void FieldExpr::Tape::run_all(const Eigen::Vector3d& x, std::vector<double>& s) const {
  s.resize(code.size());
  for (std::size_t i = 0; i < code.size(); ++i) {
    const Instr& in = code[i];
    double v = 0.0;
    switch (in.op) {
      case Op::Const: v = in.c; break;
      case Op::Var: v = x[in.k]; break;
      case Op::Add: v = s[in.a] + s[in.b]; break;
      case Op::Sub: v = s[in.a] - s[in.b]; break;
      case Op::Mul: v = s[in.a] * s[in.b]; break;
      case Op::Div:
        if (s[in.b] == 0.0) throw DomainError("division by zero");
        v = s[in.a] / s[in.b];
        break;
      case Op::Neg: v = -s[in.a]; break;
      case Op::Pow: v = ipow(s[in.a], in.k); break;
      case Op::Sin: v = std::sin(s[in.a]); break;
      case Op::Cos: v = std::cos(s[in.a]); break;
      case Op::Exp: v = std::exp(s[in.a]); break;
      case Op::Tanh: v = std::tanh(s[in.a]); break;
      case Op::Sqrt:
        if (s[in.a] < 0.0) throw DomainError("square root of a negative number");
        v = std::sqrt(s[in.a]);
        break;
    }
    s[i] = v;
  }
}

double FieldExpr::eval(const Eigen::Vector3d& x) const {
  thread_local std::vector<double> slots;
  tape0_.run_all(x, slots);
  return slots[tape0_.outputs[0]];
}

FieldSample FieldExpr::eval_grad(const Eigen::Vector3d& x) const {
  thread_local std::vector<double> slots;
  tape1_.run_all(x, slots);
  FieldSample out;
  out.value = slots[tape1_.outputs[0]];
  for (int i = 0; i < 3; ++i) out.grad[i] = slots[tape1_.outputs[1 + i]];
  return out;
}

FieldSample FieldExpr::eval_with_derivatives(const Eigen::Vector3d& x) const {
  thread_local std::vector<double> slots;
  tape2_.run_all(x, slots);
  FieldSample out;
  out.value = slots[tape2_.outputs[0]];
  for (int i = 0; i < 3; ++i) out.grad[i] = slots[tape2_.outputs[1 + i]];
  int k = 4;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double h = slots[tape2_.outputs[k++]];
      out.hess(i, j) = h;
      out.hess(j, i) = h;
    }
  }
  return out;
}

}  // namespace elastobeam
