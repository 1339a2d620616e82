#pragma once

#include "stopline/expr.hpp"

#include <memory>
#include <vector>

namespace stopline::detail {

enum class Op {
  Const, VarT, VarX,
  Neg, Abs, Exp, Log, Sin, Cos, Sqrt, Pos,
  Add, Sub, Mul, Div, Pow, Max,
  Piecewise,  // args: lhs, rhs, then, else[, direction]
  Call,       // args: argument; fn set
  RSign,      // args: u, du  -- sign(u), right limit sign(du) at u == 0
  RStep,      // args: u, du  -- 1{u > 0}, right limit 1{du > 0} at u == 0
};

enum class Cmp { Lt, Le, Gt, Ge };

using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  Cmp cmp = Cmp::Lt;
  NamedFunctionPtr fn;
  std::vector<NodePtr> args;
};

NodePtr make_const(double v);
NodePtr make_var(Var v);
NodePtr make_unary(Op op, NodePtr a);
NodePtr make_binary(Op op, NodePtr a, NodePtr b);
NodePtr make_piecewise(Cmp cmp, NodePtr lhs, NodePtr rhs, NodePtr then_branch, NodePtr else_branch,
                       NodePtr direction = nullptr);
NodePtr make_call(NamedFunctionPtr fn, NodePtr arg);
NodePtr make_right(Op op, NodePtr u, NodePtr du);

}  // namespace stopline::detail
