#pragma once

#include <memory>
#include <string>

namespace agf {

// Arithmetic expressions in one variable x: + - * / ^ (right-assoc powers),
// sin, exp, parentheses, decimal literals.
class Expression {
 public:
  static Expression parse(const std::string& text);  // throws on syntax errors
  double operator()(double x) const;
  const std::string& text() const { return text_; }

  Expression(const Expression&);
  Expression& operator=(const Expression&);
  Expression(Expression&&) noexcept;
  Expression& operator=(Expression&&) noexcept;
  ~Expression();

  struct Node;  // exposed for the parser implementation

 private:
  Expression(std::shared_ptr<const Node> root, std::string text);
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace agf
