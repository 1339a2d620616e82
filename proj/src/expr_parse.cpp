#include "expr_node.hpp"
#include "stopline/errors.hpp"
#include "stopline/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

namespace stopline {

namespace {

using detail::Cmp;
using detail::NodePtr;
using detail::Op;

class Parser {
public:
  Parser(std::string_view text, const FunctionTable& functions) : text_(text), functions_(functions) {}

  NodePtr parse_all() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail({"operator", "end of input"});
    return e;
  }

private:
  std::string text_;
  const FunctionTable& functions_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    skip_ws();
    std::string found = pos_ < text_.size() ? std::string("'") + text_[pos_] + "'" : "end of input";
    std::string msg = "syntax error at offset " + std::to_string(pos_) + ": found " + found + ", expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? ", " : "") + expected[i];
    msg += "}";
    throw SyntaxError(pos_, std::move(expected), msg);
  }

  void expect(char c) {
    if (!accept(c)) fail({std::string(1, c)});
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = detail::make_binary(Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = detail::make_binary(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = detail::make_binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = detail::make_binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return detail::make_unary(Op::Neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return detail::make_binary(Op::Pow, base, parse_unary());
    return base;
  }

  Cmp parse_cmp() {
    skip_ws();
    if (accept('<')) return accept('=') ? Cmp::Le : Cmp::Lt;
    if (accept('>')) return accept('=') ? Cmp::Ge : Cmp::Gt;
    fail({"<", "<=", ">", ">="});
  }

  std::vector<NodePtr> parse_args(std::size_t min_count, std::size_t max_count) {
    std::vector<NodePtr> args;
    expect('(');
    args.push_back(parse_expr());
    while (accept(',')) args.push_back(parse_expr());
    if (args.size() < min_count) fail({","});
    if (args.size() > max_count) fail({")"});
    expect(')');
    return args;
  }

  NodePtr parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail({"number"});
    pos_ += static_cast<std::size_t>(end - begin);
    return detail::make_const(v);
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail({"number", "identifier", "(", "-"});
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (accept('(')) {
      NodePtr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail({"number", "identifier", "(", "-"});
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    if (name == "t") return detail::make_var(Var::T);
    if (name == "x") return detail::make_var(Var::X);
    if (name == "pi") return detail::make_const(std::numbers::pi);

    static const std::pair<const char*, Op> unary[] = {
        {"abs", Op::Abs}, {"exp", Op::Exp}, {"log", Op::Log}, {"sin", Op::Sin},
        {"cos", Op::Cos}, {"sqrt", Op::Sqrt}, {"pos", Op::Pos},
    };
    for (const auto& [fname, op] : unary)
      if (name == fname) return detail::make_unary(op, parse_args(1, 1)[0]);

    if (name == "max") {
      auto a = parse_args(2, 2);
      return detail::make_binary(Op::Max, a[0], a[1]);
    }
    if (name == "rsign" || name == "rstep") {
      auto a = parse_args(2, 2);
      return detail::make_right(name == "rsign" ? Op::RSign : Op::RStep, a[0], a[1]);
    }
    if (name == "piecewise") {
      expect('(');
      NodePtr lhs = parse_expr();
      const Cmp cmp = parse_cmp();
      NodePtr rhs = parse_expr();
      expect(',');
      NodePtr then_branch = parse_expr();
      expect(',');
      NodePtr else_branch = parse_expr();
      NodePtr direction;
      if (accept(',')) direction = parse_expr();
      expect(')');
      return detail::make_piecewise(cmp, lhs, rhs, then_branch, else_branch, direction);
    }
    if (const double* v = functions_.find_constant(name)) return detail::make_const(*v);
    if (const NamedFunctionPtr* fn = functions_.find_function(name))
      return detail::make_call(*fn, parse_args(1, 1)[0]);
    throw UnknownIdentifier(name, start);
  }
};

}  // namespace

Expr Expr::parse(std::string_view text, const FunctionTable& functions) {
  Parser p(text, functions);
  return Expr(p.parse_all());
}

}  // namespace stopline
