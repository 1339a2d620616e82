#pragma once

#include "stopline/pde.hpp"
#include "stopline/problem.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stopline {

/// Free boundary per time slice t_0..t_{N-1}. The terminal slice is left out
/// because V = G there by construction.
struct Boundary {
  Orientation orientation = Orientation::StopBelow;
  std::vector<double> t;
  std::vector<double> b;       // refined where possible, else coarse; +-inf sentinels
  std::vector<double> coarse;  // midpoint of the bracketing cell
  std::vector<int> multiplicity;
  std::vector<int> stop_node;      // stopping-side node of the bracketing cell, -1 for sentinels
  std::vector<bool> far_field;     // slice had a degenerate STOP run at the continuation edge
  double dx = 0.0;
  double dt = 0.0;
  double horizon = 0.0;
  std::pair<double, double> window{0.0, 0.0};

  int size() const { return static_cast<int>(t.size()); }
  bool finite(int i) const;
  /// Finite with a single crossing.
  bool usable(int i) const { return finite(i) && multiplicity[i] == 1; }
};

struct ExtractOptions {
  std::optional<std::pair<double, double>> window;
  /// Trailing STOP nodes at the continuation edge whose PDE residual is below
  /// this are treated as far-field round-off, not as a second crossing.
  double far_field_tol = 1e-6;
};

/// Coarse boundary from the indicator (cell midpoints).
Boundary extract_boundary(const ValueSurface& vs, Orientation orientation, const ExtractOptions& opt = {});

/// Sub-grid crossing of V - G inside [x_j, x_{j+1}] at slice i; bisection on
/// the cubic through the four nearest nodes. Throws Error(NoSignChange).
double refine_crossing(const ValueSurface& vs, int i, int j);

/// extract_boundary followed by refine_crossing on every finite slice.
Boundary refine_boundary(const ValueSurface& vs, Orientation orientation, const ExtractOptions& opt = {});

enum class Direction { Increasing, Decreasing, Flat };
const char* to_string(Direction d);

struct MonotoneSegment {
  int i1 = 0;
  int i2 = 0;
  Direction direction = Direction::Flat;
  double tol = 0.0;
};

/// Greedy maximal monotone runs over the usable slices. Consecutive segments
/// share an end point. Throws Error(AllSentinel) with fewer than two usable nodes.
std::vector<MonotoneSegment> segment_monotone(const Boundary& b, double mono_tol);

struct JumpFlag {
  double t = 0.0;
  double size = 0.0;
  std::vector<double> persistence;  // local max increment per level, coarse to fine
};

struct JumpReport {
  std::vector<JumpFlag> flags;
  std::vector<JumpFlag> candidates;   // inspected but not persistent
  std::vector<double> max_increment;  // per level, over the inspected time range
  std::vector<double> dx;
  std::vector<double> dt;
  double jump_factor = 10.0;
  double t_max = 0.0;
};

/// Levels ordered coarse to fine (at least three). Increments after
/// t_fraction * T are not inspected.
JumpReport detect_jumps(const std::vector<Boundary>& levels, double jump_factor = 10.0, double t_fraction = 0.95);

/// V_x(t_i, b+) - G_x(t_i, b-) from one-sided three-point differences
/// extrapolated to b. Throws Error(SentinelSlice).
double smooth_fit_gap(const ValueSurface& vs, const Boundary& b, int i);
/// Per slice; NaN at sentinel slices. Throws Error(SentinelSlice) if every slice is a sentinel.
std::vector<double> smooth_fit_gaps(const ValueSurface& vs, const Boundary& b);

std::string boundary_csv(const Boundary& b, const std::vector<double>& gaps);
std::string jumps_json(const JumpReport& r);

}  // namespace stopline
