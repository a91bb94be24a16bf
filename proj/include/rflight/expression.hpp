#pragma once

#include <memory>
#include <string>

namespace rflight {

/*
 * Closed-form scalar expression in the variable r.
 *
 * Grammar:
 *   expr   := term (('+' | '-') term)*
 *   term   := unary (('*' | '/') unary)*
 *   unary  := '-' unary | power
 *   power  := atom ('^' unary)?          right associative
 *   atom   := number | 'r' | func '(' expr (',' expr)? ')' | '(' expr ')'
 *   func   := sqrt | exp | log | pow
 *
 * Derivatives are exact (forward-mode dual numbers), not finite differences.
 */
class Expression {
 public:
  struct Node;

  /// Throws ConfigError with the character offset on malformed input.
  static Expression parse(const std::string& text);

  double value(double r) const;
  double derivative(double r) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace rflight
