#pragma once

// Arithmetic expressions over the variables t and x with symbolic
// differentiation. Grammar is documented in docs/grammar.md.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stopline {

enum class Var { T, X };

struct Bindings {
  double t = 0.0;
  double x = 0.0;
};

/// A user-registered scalar function of one argument, e.g. a CDF and its
/// primitive. `kinks` lists argument values where the function or one of its
/// registered derivatives is not smooth.
struct NamedFunction {
  std::string name;
  std::function<double(double)> eval;
  std::shared_ptr<const NamedFunction> derivative;
  std::vector<double> kinks;
};
using NamedFunctionPtr = std::shared_ptr<const NamedFunction>;

class FunctionTable {
public:
  void add(NamedFunctionPtr fn);
  void add_constant(const std::string& name, double value);

  const NamedFunctionPtr* find_function(std::string_view name) const;
  const double* find_constant(std::string_view name) const;
  bool empty() const { return functions_.empty() && constants_.empty(); }

  /// Registers `name` as the continuous piecewise-linear interpolant through
  /// `points` (constant beyond the end points), `name_int` as its primitive
  /// with lower limit 0, and `name_d` as its piecewise-constant derivative.
  void add_piecewise_linear(const std::string& name, std::vector<std::pair<double, double>> points);

private:
  std::map<std::string, NamedFunctionPtr, std::less<>> functions_;
  std::map<std::string, double, std::less<>> constants_;
};

namespace detail {
struct Node;
}

/// Immutable expression tree. Copies share structure; safe to evaluate from
/// several threads.
class Expr {
public:
  Expr();  // the constant 0

  static Expr parse(std::string_view text, const FunctionTable& functions = {});
  static Expr constant(double value);
  static Expr variable(Var v);

  /// Throws DomainError on non-finite bindings or when any subexpression
  /// leaves its domain (log of non-positive, division by zero, overflow).
  double evaluate(const Bindings& at) const;
  double operator()(double t, double x) const { return evaluate({t, x}); }

  /// Symbolic derivative. At kinks of abs/pos/max/piecewise the derivative
  /// evaluates to the limit from the right.
  Expr differentiate(Var v) const;

  /// Fully parenthesised text that parses back to the same tree.
  std::string to_string() const;

  bool depends_on(Var v) const;
  bool is_constant() const;
  /// Value of a variable-free expression.
  double constant_value() const;
  bool is_zero() const;

  /// True when some kink guard of the tree (abs, pos, max, piecewise, or a
  /// registered kink of a named function) changes sign or vanishes for x in
  /// the closed interval [xa, xb] at time t.
  bool kink_between(double t, double xa, double xb) const;

  /// Kink abscissae located by scanning n cells of [lo, hi] at time t and
  /// bisecting any sign change of a guard expression.
  std::vector<double> locate_kinks(double t, double lo, double hi, int n = 2000) const;

  Expr substitute(Var v, const Expr& replacement) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& a, const Expr& b);

  const detail::Node& node() const { return *node_; }
  explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}

private:
  std::shared_ptr<const detail::Node> node_;
};

}  // namespace stopline
