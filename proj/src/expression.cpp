#include "rflight/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "rflight/errors.hpp"

namespace rflight {

namespace {

struct Dual {
  double v;
  double d;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

Dual dual_pow(Dual a, Dual b) {
  const double v = std::pow(a.v, b.v);
  // d(a^b) = b a^{b-1} a' + a^b log(a) b'; skip the log term when b' = 0
  // so negative bases with constant integer exponents work.
  double d = 0.0;
  if (a.d != 0.0) d += b.v * std::pow(a.v, b.v - 1.0) * a.d;
  if (b.d != 0.0) d += v * std::log(a.v) * b.d;
  return {v, d};
}

enum class Op { Number, Var, Add, Sub, Mul, Div, Pow, Neg, Sqrt, Exp, Log };

}  // namespace

struct Expression::Node {
  Op op;
  double number = 0.0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, std::vector<NodePtr> args = {}, double number = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  n->number = number;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "': " + what + " at offset " +
                      std::to_string(pos_));
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
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Op::Add, {lhs, term()});
      } else if (accept('-')) {
        lhs = make(Op::Sub, {lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::Mul, {lhs, unary()});
      } else if (accept('/')) {
        lhs = make(Op::Div, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Op::Pow, {base, unary()});
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Op::Number, {}, v);
    }
    if (accept('(')) {
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "r") return make(Op::Var);
      Op op;
      int arity = 1;
      if (name == "sqrt") {
        op = Op::Sqrt;
      } else if (name == "exp") {
        op = Op::Exp;
      } else if (name == "log") {
        op = Op::Log;
      } else if (name == "pow") {
        op = Op::Pow;
        arity = 2;
      } else {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      expect('(');
      std::vector<NodePtr> args{expr()};
      if (arity == 2) {
        expect(',');
        args.push_back(expr());
      }
      expect(')');
      return make(op, std::move(args));
    }
    fail(std::string("unexpected '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

Dual eval(const Expression::Node& n, Dual r) {
  switch (n.op) {
    case Op::Number:
      return {n.number, 0.0};
    case Op::Var:
      return r;
    case Op::Add:
      return eval(*n.args[0], r) + eval(*n.args[1], r);
    case Op::Sub:
      return eval(*n.args[0], r) - eval(*n.args[1], r);
    case Op::Mul:
      return eval(*n.args[0], r) * eval(*n.args[1], r);
    case Op::Div:
      return eval(*n.args[0], r) / eval(*n.args[1], r);
    case Op::Pow:
      return dual_pow(eval(*n.args[0], r), eval(*n.args[1], r));
    case Op::Neg: {
      const Dual a = eval(*n.args[0], r);
      return {-a.v, -a.d};
    }
    case Op::Sqrt: {
      const Dual a = eval(*n.args[0], r);
      const double s = std::sqrt(a.v);
      return {s, a.d / (2.0 * s)};
    }
    case Op::Exp: {
      const Dual a = eval(*n.args[0], r);
      const double e = std::exp(a.v);
      return {e, e * a.d};
    }
    case Op::Log: {
      const Dual a = eval(*n.args[0], r);
      return {std::log(a.v), a.d / a.v};
    }
  }
  return {std::nan(""), std::nan("")};
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

double Expression::value(double r) const { return eval(*root_, {r, 0.0}).v; }

double Expression::derivative(double r) const { return eval(*root_, {r, 1.0}).d; }

}  // namespace rflight
