#include "stopline/expr.hpp"

#include "expr_node.hpp"
#include "stopline/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace stopline {

using detail::Cmp;
using detail::make_binary;
using detail::make_call;
using detail::make_const;
using detail::make_piecewise;
using detail::make_right;
using detail::make_unary;
using detail::Node;
using detail::NodePtr;
using detail::Op;

namespace detail {

namespace {

bool is_const(const NodePtr& n) { return n->op == Op::Const; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Abs: return std::fabs(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Sqrt: return std::sqrt(a);
    case Op::Pos: return a > 0.0 ? a : 0.0;
    default: return std::nan("");
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return b == 0.0 ? std::nan("") : a / b;
    case Op::Pow: return std::pow(a, b);
    case Op::Max: return a >= b ? a : b;
    default: return std::nan("");
  }
}

}  // namespace

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_var(Var v) {
  auto n = std::make_shared<Node>();
  n->op = v == Var::T ? Op::VarT : Op::VarX;
  return n;
}

NodePtr make_unary(Op op, NodePtr a) {
  if (is_const(a)) {
    const double v = apply_unary(op, a->value);
    if (std::isfinite(v)) return make_const(v);
  }
  if (op == Op::Neg && a->op == Op::Neg) return a->args[0];
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(a)};
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) {
    const double v = apply_binary(op, a->value, b->value);
    if (std::isfinite(v)) return make_const(v);
  }
  switch (op) {
    case Op::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Div:
      if (is_const(b, 1.0)) return a;
      if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_const(0.0);
      break;
    case Op::Pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      break;
    default: break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(a), std::move(b)};
  return n;
}

NodePtr make_piecewise(Cmp cmp, NodePtr lhs, NodePtr rhs, NodePtr then_branch, NodePtr else_branch,
                       NodePtr direction) {
  auto n = std::make_shared<Node>();
  n->op = Op::Piecewise;
  n->cmp = cmp;
  n->args = {std::move(lhs), std::move(rhs), std::move(then_branch), std::move(else_branch)};
  if (direction) n->args.push_back(std::move(direction));
  return n;
}

NodePtr make_call(NamedFunctionPtr fn, NodePtr arg) {
  if (is_const(arg)) {
    const double v = fn->eval(arg->value);
    if (std::isfinite(v) && fn->kinks.empty()) return make_const(v);
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Call;
  n->fn = std::move(fn);
  n->args = {std::move(arg)};
  return n;
}

NodePtr make_right(Op op, NodePtr u, NodePtr du) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(u), std::move(du)};
  return n;
}

}  // namespace detail

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  return v < 0.0 ? "(" + s + ")" : s;
}

const char* cmp_text(Cmp c) {
  switch (c) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
  }
  return "<";
}

const char* unary_name(Op op) {
  switch (op) {
    case Op::Abs: return "abs";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Sqrt: return "sqrt";
    case Op::Pos: return "pos";
    default: return "?";
  }
}

const char* binary_text(Op op) {
  switch (op) {
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    case Op::Div: return " / ";
    case Op::Pow: return " ^ ";
    default: return " ? ";
  }
}

std::string print(const Node& n) {
  switch (n.op) {
    case Op::Const: return format_number(n.value);
    case Op::VarT: return "t";
    case Op::VarX: return "x";
    case Op::Neg: return "(-" + print(*n.args[0]) + ")";
    case Op::Abs: case Op::Exp: case Op::Log: case Op::Sin: case Op::Cos: case Op::Sqrt: case Op::Pos:
      return std::string(unary_name(n.op)) + "(" + print(*n.args[0]) + ")";
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow:
      return "(" + print(*n.args[0]) + binary_text(n.op) + print(*n.args[1]) + ")";
    case Op::Max: return "max(" + print(*n.args[0]) + ", " + print(*n.args[1]) + ")";
    case Op::Piecewise: {
      std::string s = "piecewise(" + print(*n.args[0]) + " " + cmp_text(n.cmp) + " " + print(*n.args[1]) + ", " +
                      print(*n.args[2]) + ", " + print(*n.args[3]);
      if (n.args.size() > 4) s += ", " + print(*n.args[4]);
      return s + ")";
    }
    case Op::Call: return n.fn->name + "(" + print(*n.args[0]) + ")";
    case Op::RSign: return "rsign(" + print(*n.args[0]) + ", " + print(*n.args[1]) + ")";
    case Op::RStep: return "rstep(" + print(*n.args[0]) + ", " + print(*n.args[1]) + ")";
  }
  return "?";
}

[[noreturn]] void domain_fail(const Node& n, const std::string& what) { throw DomainError(print(n), what); }

bool compare(Cmp c, double s) {
  switch (c) {
    case Cmp::Lt: return s < 0.0;
    case Cmp::Le: return s <= 0.0;
    case Cmp::Gt: return s > 0.0;
    case Cmp::Ge: return s >= 0.0;
  }
  return false;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double eval(const Node& n, const Bindings& b) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarT: return b.t;
    case Op::VarX: return b.x;
    case Op::Neg: return -eval(*n.args[0], b);
    case Op::Abs: return std::fabs(eval(*n.args[0], b));
    case Op::Exp: {
      const double v = std::exp(eval(*n.args[0], b));
      if (!std::isfinite(v)) domain_fail(n, "overflow");
      return v;
    }
    case Op::Log: {
      const double a = eval(*n.args[0], b);
      if (!(a > 0.0)) domain_fail(n, "log of non-positive value");
      return std::log(a);
    }
    case Op::Sin: return std::sin(eval(*n.args[0], b));
    case Op::Cos: return std::cos(eval(*n.args[0], b));
    case Op::Sqrt: {
      const double a = eval(*n.args[0], b);
      if (a < 0.0) domain_fail(n, "sqrt of negative value");
      return std::sqrt(a);
    }
    case Op::Pos: {
      const double a = eval(*n.args[0], b);
      return a > 0.0 ? a : 0.0;
    }
    case Op::Add: return eval(*n.args[0], b) + eval(*n.args[1], b);
    case Op::Sub: return eval(*n.args[0], b) - eval(*n.args[1], b);
    case Op::Mul: return eval(*n.args[0], b) * eval(*n.args[1], b);
    case Op::Div: {
      const double num = eval(*n.args[0], b);
      const double den = eval(*n.args[1], b);
      if (den == 0.0) domain_fail(n, "division by zero");
      return num / den;
    }
    case Op::Pow: {
      const double v = std::pow(eval(*n.args[0], b), eval(*n.args[1], b));
      if (!std::isfinite(v)) domain_fail(n, "power outside domain");
      return v;
    }
    case Op::Max: {
      const double l = eval(*n.args[0], b);
      const double r = eval(*n.args[1], b);
      return l >= r ? l : r;
    }
    case Op::Piecewise: {
      double s = eval(*n.args[0], b) - eval(*n.args[1], b);
      if (s == 0.0 && n.args.size() > 4) s = sign_of(eval(*n.args[4], b));
      return compare(n.cmp, s) ? eval(*n.args[2], b) : eval(*n.args[3], b);
    }
    case Op::Call: {
      const double v = n.fn->eval(eval(*n.args[0], b));
      if (!std::isfinite(v)) domain_fail(n, "named function returned non-finite value");
      return v;
    }
    case Op::RSign: {
      const double u = eval(*n.args[0], b);
      if (u != 0.0) return sign_of(u);
      return sign_of(eval(*n.args[1], b));
    }
    case Op::RStep: {
      const double u = eval(*n.args[0], b);
      if (u != 0.0) return u > 0.0 ? 1.0 : 0.0;
      return eval(*n.args[1], b) > 0.0 ? 1.0 : 0.0;
    }
  }
  return std::nan("");
}

bool depends(const Node& n, Op var) {
  if (n.op == var) return true;
  return std::any_of(n.args.begin(), n.args.end(), [&](const NodePtr& a) { return depends(*a, var); });
}

NodePtr diff(const NodePtr& np, Var v) {
  const Node& n = *np;
  const Op var_op = v == Var::T ? Op::VarT : Op::VarX;
  if (!depends(n, var_op)) return make_const(0.0);
  auto d = [&](std::size_t i) { return diff(n.args[i], v); };
  const auto& a = n.args;
  switch (n.op) {
    case Op::Const: return make_const(0.0);
    case Op::VarT: case Op::VarX: return make_const(1.0);
    case Op::Neg: return make_unary(Op::Neg, d(0));
    case Op::Abs: {
      auto du = d(0);
      return make_binary(Op::Mul, make_right(Op::RSign, a[0], du), du);
    }
    case Op::Pos: {
      auto du = d(0);
      return make_binary(Op::Mul, make_right(Op::RStep, a[0], du), du);
    }
    case Op::Exp: return make_binary(Op::Mul, np, d(0));
    case Op::Log: return make_binary(Op::Div, d(0), a[0]);
    case Op::Sin: return make_binary(Op::Mul, make_unary(Op::Cos, a[0]), d(0));
    case Op::Cos: return make_unary(Op::Neg, make_binary(Op::Mul, make_unary(Op::Sin, a[0]), d(0)));
    case Op::Sqrt: return make_binary(Op::Div, d(0), make_binary(Op::Mul, make_const(2.0), np));
    case Op::Add: return make_binary(Op::Add, d(0), d(1));
    case Op::Sub: return make_binary(Op::Sub, d(0), d(1));
    case Op::Mul:
      return make_binary(Op::Add, make_binary(Op::Mul, d(0), a[1]), make_binary(Op::Mul, a[0], d(1)));
    case Op::Div:
      return make_binary(Op::Div,
                         make_binary(Op::Sub, make_binary(Op::Mul, d(0), a[1]), make_binary(Op::Mul, a[0], d(1))),
                         make_binary(Op::Pow, a[1], make_const(2.0)));
    case Op::Pow: {
      if (!depends(*a[1], var_op)) {
        auto expo_minus_one = make_binary(Op::Sub, a[1], make_const(1.0));
        return make_binary(Op::Mul, make_binary(Op::Mul, a[1], make_binary(Op::Pow, a[0], expo_minus_one)), d(0));
      }
      auto inner = make_binary(Op::Add, make_binary(Op::Mul, d(1), make_unary(Op::Log, a[0])),
                               make_binary(Op::Div, make_binary(Op::Mul, a[1], d(0)), a[0]));
      return make_binary(Op::Mul, np, inner);
    }
    case Op::Max: {
      auto gap = make_binary(Op::Sub, a[0], a[1]);
      auto step = make_right(Op::RStep, gap, diff(gap, v));
      auto da = d(0);
      auto db = d(1);
      return make_binary(Op::Add, db, make_binary(Op::Mul, step, make_binary(Op::Sub, da, db)));
    }
    case Op::Piecewise: {
      auto gap = make_binary(Op::Sub, a[0], a[1]);
      return make_piecewise(n.cmp, a[0], a[1], d(2), d(3), diff(gap, v));
    }
    case Op::Call: {
      if (!n.fn->derivative) throw NonDifferentiable(n.fn->name);
      return make_binary(Op::Mul, make_call(n.fn->derivative, a[0]), d(0));
    }
    case Op::RSign: case Op::RStep: return make_const(0.0);
  }
  return make_const(0.0);
}

NodePtr subst(const NodePtr& np, Op var_op, const NodePtr& repl) {
  const Node& n = *np;
  if (n.op == var_op) return repl;
  if (n.args.empty()) return np;
  std::vector<NodePtr> args;
  args.reserve(n.args.size());
  for (const auto& a : n.args) args.push_back(subst(a, var_op, repl));
  switch (n.op) {
    case Op::Neg: case Op::Abs: case Op::Exp: case Op::Log: case Op::Sin: case Op::Cos: case Op::Sqrt:
    case Op::Pos:
      return make_unary(n.op, args[0]);
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: case Op::Max:
      return make_binary(n.op, args[0], args[1]);
    case Op::Piecewise:
      return make_piecewise(n.cmp, args[0], args[1], args[2], args[3], args.size() > 4 ? args[4] : nullptr);
    case Op::Call: return make_call(n.fn, args[0]);
    case Op::RSign: case Op::RStep: return make_right(n.op, args[0], args[1]);
    default: return np;
  }
}

void collect_guards(const NodePtr& np, std::vector<NodePtr>& out) {
  const Node& n = *np;
  switch (n.op) {
    case Op::Abs: case Op::Pos: case Op::RSign: case Op::RStep: out.push_back(n.args[0]); break;
    case Op::Max: out.push_back(make_binary(Op::Sub, n.args[0], n.args[1])); break;
    case Op::Piecewise: out.push_back(make_binary(Op::Sub, n.args[0], n.args[1])); break;
    case Op::Call:
      for (double k : n.fn->kinks) out.push_back(make_binary(Op::Sub, n.args[0], make_const(k)));
      break;
    default: break;
  }
  for (const auto& a : n.args) collect_guards(a, out);
}

bool guard_value(const NodePtr& g, double t, double x, double& out) {
  try {
    out = eval(*g, {t, x});
    return std::isfinite(out);
  } catch (const DomainError&) {
    return false;
  }
}

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::constant(double value) { return Expr(make_const(value)); }
Expr Expr::variable(Var v) { return Expr(detail::make_var(v)); }

double Expr::evaluate(const Bindings& at) const {
  if (!std::isfinite(at.t) || !std::isfinite(at.x)) throw DomainError(to_string(), "non-finite binding");
  const double v = eval(*node_, at);
  if (!std::isfinite(v)) throw DomainError(to_string(), "non-finite result");
  return v;
}

Expr Expr::differentiate(Var v) const { return Expr(diff(node_, v)); }

std::string Expr::to_string() const { return print(*node_); }

bool Expr::depends_on(Var v) const { return depends(*node_, v == Var::T ? Op::VarT : Op::VarX); }

bool Expr::is_constant() const { return node_->op == Op::Const; }

double Expr::constant_value() const {
  if (depends_on(Var::T) || depends_on(Var::X)) throw make_error("DomainError", "expression is not constant");
  return evaluate({0.0, 0.0});
}

bool Expr::is_zero() const { return node_->op == Op::Const && node_->value == 0.0; }

bool Expr::kink_between(double t, double xa, double xb) const {
  std::vector<NodePtr> guards;
  collect_guards(node_, guards);
  for (const auto& g : guards) {
    double ga = 0.0;
    double gb = 0.0;
    if (!guard_value(g, t, xa, ga) || !guard_value(g, t, xb, gb)) return true;
    if (ga == 0.0 || gb == 0.0 || (ga < 0.0) != (gb < 0.0)) return true;
  }
  return false;
}

std::vector<double> Expr::locate_kinks(double t, double lo, double hi, int n) const {
  std::vector<NodePtr> guards;
  collect_guards(node_, guards);
  std::vector<double> out;
  const double h = (hi - lo) / n;
  for (const auto& g : guards) {
    if (!depends(*g, Op::VarX)) continue;
    double prev = 0.0;
    bool have_prev = guard_value(g, t, lo, prev);
    for (int k = 1; k <= n; ++k) {
      const double xa = lo + (k - 1) * h;
      const double xb = k == n ? hi : lo + k * h;
      double cur = 0.0;
      const bool have_cur = guard_value(g, t, xb, cur);
      if (have_prev && have_cur) {
        if (prev == 0.0) {
          out.push_back(xa);
        } else if (cur != 0.0 && (prev < 0.0) != (cur < 0.0)) {
          double a = xa;
          double b = xb;
          double fa = prev;
          for (int it = 0; it < 80; ++it) {
            const double m = 0.5 * (a + b);
            double fm = 0.0;
            if (!guard_value(g, t, m, fm)) break;
            if (fm == 0.0) { a = b = m; break; }
            if ((fm < 0.0) == (fa < 0.0)) { a = m; fa = fm; } else { b = m; }
          }
          out.push_back(0.5 * (a + b));
        }
      }
      if (k == n && have_cur && cur == 0.0) out.push_back(xb);
      prev = cur;
      have_prev = have_cur;
    }
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double k : out)
    if (uniq.empty() || k - uniq.back() > 1e-9 * (1.0 + std::fabs(k))) uniq.push_back(k);
  return uniq;
}

Expr Expr::substitute(Var v, const Expr& replacement) const {
  return Expr(subst(node_, v == Var::T ? Op::VarT : Op::VarX, replacement.node_));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Add, a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Sub, a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Mul, a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Div, a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(make_unary(Op::Neg, a.node_)); }
Expr pow(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Pow, a.node_, b.node_)); }

// --- FunctionTable --------------------------------------------------------

void FunctionTable::add(NamedFunctionPtr fn) {
  const std::string name = fn->name;
  functions_[name] = std::move(fn);
}

void FunctionTable::add_constant(const std::string& name, double value) { constants_[name] = value; }

const NamedFunctionPtr* FunctionTable::find_function(std::string_view name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

const double* FunctionTable::find_constant(std::string_view name) const {
  auto it = constants_.find(name);
  return it == constants_.end() ? nullptr : &it->second;
}

void FunctionTable::add_piecewise_linear(const std::string& name, std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw make_error("SchemaError", "piecewise-linear function '" + name + "' needs >= 2 points");
  std::sort(points.begin(), points.end());
  for (std::size_t k = 1; k < points.size(); ++k)
    if (!(points[k].first > points[k - 1].first))
      throw make_error("SchemaError", "piecewise-linear function '" + name + "' has repeated abscissae");

  struct Table {
    std::vector<double> xs, ys, slopes, cum;
  };
  auto tab = std::make_shared<Table>();
  for (const auto& [px, py] : points) {
    tab->xs.push_back(px);
    tab->ys.push_back(py);
  }
  const std::size_t n = tab->xs.size();
  for (std::size_t k = 0; k + 1 < n; ++k)
    tab->slopes.push_back((tab->ys[k + 1] - tab->ys[k]) / (tab->xs[k + 1] - tab->xs[k]));
  tab->cum.assign(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double w = tab->xs[k + 1] - tab->xs[k];
    tab->cum[k + 1] = tab->cum[k] + w * tab->ys[k] + 0.5 * tab->slopes[k] * w * w;
  }
  auto segment = [tab](double x) -> std::ptrdiff_t {
    if (x < tab->xs.front()) return -1;
    if (x >= tab->xs.back()) return static_cast<std::ptrdiff_t>(tab->xs.size()) - 1;
    auto it = std::upper_bound(tab->xs.begin(), tab->xs.end(), x);
    return (it - tab->xs.begin()) - 1;
  };
  auto value = [tab, segment](double x) {
    const auto k = segment(x);
    if (k < 0) return tab->ys.front();
    if (k >= static_cast<std::ptrdiff_t>(tab->xs.size()) - 1) return tab->ys.back();
    return tab->ys[k] + tab->slopes[k] * (x - tab->xs[k]);
  };
  auto slope = [tab, segment](double x) {
    const auto k = segment(x);
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(tab->xs.size()) - 1) return 0.0;
    return tab->slopes[k];
  };
  auto antideriv = [tab, segment](double x) {
    const auto k = segment(x);
    if (k < 0) return tab->ys.front() * (x - tab->xs.front());
    const std::size_t last = tab->xs.size() - 1;
    if (k >= static_cast<std::ptrdiff_t>(last)) return tab->cum[last] + tab->ys[last] * (x - tab->xs[last]);
    const double d = x - tab->xs[k];
    return tab->cum[k] + tab->ys[k] * d + 0.5 * tab->slopes[k] * d * d;
  };
  const double a0 = antideriv(0.0);

  auto zero = std::make_shared<NamedFunction>();
  zero->name = name + "_dd";
  zero->eval = [](double) { return 0.0; };
  zero->kinks = tab->xs;

  auto d1 = std::make_shared<NamedFunction>();
  d1->name = name + "_d";
  d1->eval = slope;
  d1->derivative = zero;
  d1->kinks = tab->xs;

  auto f = std::make_shared<NamedFunction>();
  f->name = name;
  f->eval = value;
  f->derivative = d1;
  f->kinks = tab->xs;

  auto prim = std::make_shared<NamedFunction>();
  prim->name = name + "_int";
  prim->eval = [antideriv, a0](double x) { return antideriv(x) - a0; };
  prim->derivative = f;
  prim->kinks = tab->xs;

  add(zero);
  add(d1);
  add(f);
  add(prim);
}

}  // namespace stopline
