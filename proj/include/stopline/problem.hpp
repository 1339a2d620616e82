#pragma once

#include "stopline/diffusion.hpp"
#include "stopline/expr.hpp"
#include "stopline/gain.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace stopline {

/// STOP_BELOW: stopping set {x <= b(t)}; STOP_ABOVE: stopping set {x >= c(t)}.
enum class Orientation { StopBelow, StopAbove };

/// Truncation boundary condition. Auto picks Dirichlet V = G on the stopping
/// side and zero second derivative on the continuation side.
enum class SideBc { Auto, Dirichlet, Linear };

struct ProblemSpec {
  std::string id = "custom";
  Diffusion diffusion;
  GainSpec gain;
  double horizon = 1.0;
  double x_lo = 0.0;
  double x_hi = 1.0;
  Orientation orientation = Orientation::StopBelow;
  SideBc bc_lo = SideBc::Auto;
  SideBc bc_hi = SideBc::Auto;
  /// False for pure Cauchy problems solved without the obstacle.
  bool constrained = true;
  /// x-range holding the single boundary that is extracted and audited. Empty
  /// means the whole truncated domain.
  std::optional<std::pair<double, double>> window;
  std::shared_ptr<const FunctionTable> functions;

  std::pair<double, double> audit_window() const {
    return window ? *window : std::make_pair(x_lo, x_hi);
  }
};

const char* to_string(Orientation o);
Orientation orientation_from_string(const std::string& s);

/// The reflected problem x -> -x with swapped orientation.
ProblemSpec mirror(const ProblemSpec& p);

}  // namespace stopline
