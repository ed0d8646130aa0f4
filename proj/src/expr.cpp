#include "agf/expr.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace agf {

struct Expression::Node {
  enum class Op { constant, variable, add, sub, mul, div, pow, neg, sin, exp };
  Op op;
  double value = 0.0;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(double x) const {
    switch (op) {
      case Op::constant: return value;
      case Op::variable: return x;
      case Op::add: return lhs->eval(x) + rhs->eval(x);
      case Op::sub: return lhs->eval(x) - rhs->eval(x);
      case Op::mul: return lhs->eval(x) * rhs->eval(x);
      case Op::div: return lhs->eval(x) / rhs->eval(x);
      case Op::pow: return std::pow(lhs->eval(x), rhs->eval(x));
      case Op::neg: return -lhs->eval(x);
      case Op::sin: return std::sin(lhs->eval(x));
      case Op::exp: return std::exp(lhs->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr, double v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->value = v;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    NodePtr e = expression();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("expression error at position " + std::to_string(pos_) + ": " +
                                msg + " in '" + s_ + "'");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expression() {
    NodePtr e = term();
    while (true) {
      if (consume('+'))
        e = make(Op::add, e, term());
      else if (consume('-'))
        e = make(Op::sub, e, term());
      else
        return e;
    }
  }

  NodePtr term() {
    NodePtr e = factor();
    while (true) {
      if (consume('*'))
        e = make(Op::mul, e, factor());
      else if (consume('/'))
        e = make(Op::div, e, factor());
      else
        return e;
    }
  }

  NodePtr factor() {
    if (consume('-')) return make(Op::neg, factor());
    if (consume('+')) return factor();
    NodePtr base = primary();
    if (consume('^')) return make(Op::pow, base, factor());  // right-associative
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      if (!consume(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
      v = std::stod(s_.substr(pos_), &consumed);
    } catch (...) {
      fail("bad number literal");
    }
    pos_ += consumed;
    return make(Op::constant, nullptr, nullptr, v);
  }

  NodePtr name() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string word = s_.substr(start, pos_ - start);
    if (word == "x") return make(Op::variable);
    if (word == "sin" || word == "exp") {
      if (!consume('(')) fail(word + " expects '('");
      NodePtr arg = expression();
      if (!consume(')')) fail("missing ')'");
      return make(word == "sin" ? Op::sin : Op::exp, arg);
    }
    fail("unknown name '" + word + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  return Expression(p.run(), text);
}

double Expression::operator()(double x) const { return root_->eval(x); }

Expression::Expression(std::shared_ptr<const Node> root, std::string text)
    : root_(std::move(root)), text_(std::move(text)) {}
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;
Expression::~Expression() = default;

}  // namespace agf
