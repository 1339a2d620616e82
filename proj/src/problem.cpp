#include "stopline/problem.hpp"

#include "stopline/errors.hpp"

namespace stopline {

const char* to_string(Orientation o) { return o == Orientation::StopBelow ? "stop_below" : "stop_above"; }

Orientation orientation_from_string(const std::string& s) {
  if (s == "stop_below" || s == "STOP_BELOW") return Orientation::StopBelow;
  if (s == "stop_above" || s == "STOP_ABOVE") return Orientation::StopAbove;
  throw make_error("SchemaError", "unknown orientation '" + s + "'");
}

ProblemSpec mirror(const ProblemSpec& p) {
  const Expr neg_x = -Expr::variable(Var::X);
  ProblemSpec m = p;
  m.id = p.id + "_mirrored";
  m.diffusion = p.diffusion.mirrored();
  m.gain.gain = p.gain.gain.substitute(Var::X, neg_x);
  if (p.gain.terminal) m.gain.terminal = p.gain.terminal->substitute(Var::X, neg_x);
  m.gain.discount = p.gain.discount.substitute(Var::X, neg_x);
  m.gain.cost = p.gain.cost.substitute(Var::X, neg_x);
  m.gain.kinks.clear();
  for (double k : p.gain.kinks) m.gain.kinks.push_back(-k);
  m.x_lo = -p.x_hi;
  m.x_hi = -p.x_lo;
  m.orientation = p.orientation == Orientation::StopBelow ? Orientation::StopAbove : Orientation::StopBelow;
  m.bc_lo = p.bc_hi;
  m.bc_hi = p.bc_lo;
  if (p.window) m.window = std::make_pair(-p.window->second, -p.window->first);
  return m;
}

}  // namespace stopline
