#pragma once

#include "stopline/grid.hpp"
#include "stopline/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stopline {

enum class Phase : std::uint8_t { Continue = 0, Stop = 1 };

struct PsorParams {
  double omega = 1.2;
  double tol = 1e-9;
  int max_iter = 10000;
};

struct Scheme {
  double theta = 0.5;
  int rannacher_steps = 4;
  PsorParams psor;
};

/// Value function on a time-space grid, row-major by time slice.
struct ValueSurface {
  Grid grid;
  std::vector<double> V;
  std::vector<double> G;         // obstacle g(t_i, x_j); terminal slice holds h
  std::vector<double> residual;      // V - G at STOP nodes, pde_residual elsewhere
  std::vector<double> pde_residual;  // discrete V_t + L V - r V - C, 0 on edge rows and at t = T
  std::vector<Phase> indicator;
  bool constrained = true;
  double tol_psor = 1e-9;
  double tol_indicator = 1e-8;
  long psor_iterations = 0;
  int psor_max_iterations = 0;

  std::size_t at(int i, int j) const { return static_cast<std::size_t>(i) * grid.x.size() + j; }
  double v(int i, int j) const { return V[at(i, j)]; }
  double g(int i, int j) const { return G[at(i, j)]; }
  double res(int i, int j) const { return residual[at(i, j)]; }
  double pde_res(int i, int j) const { return pde_residual[at(i, j)]; }
  Phase phase(int i, int j) const { return indicator[at(i, j)]; }
};

/// Backward theta-scheme with a projected SOR solve of the discrete linear
/// complementarity problem per step. Throws Error(PsorDiverged).
ValueSurface solve_vi(const ProblemSpec& p, const Grid& g, const Scheme& scheme = {});

/// Same stepping without the obstacle. The terminal slice uses h (or G).
ValueSurface solve_unconstrained(const ProblemSpec& p, const Grid& g, const Scheme& scheme = {});

/// Worst violations of the obstacle and complementarity invariants.
struct SurfaceAudit {
  double min_v_minus_g = 0.0;
  double max_complementarity = 0.0;
  double max_terminal_error = 0.0;
};
SurfaceAudit audit_surface(const ValueSurface& vs);

/// Bilinear interpolation of V at (t, x).
double interpolate(const ValueSurface& vs, double t, double x);

/// value.csv: t,x,V,G,indicator,residual with 17 significant digits.
std::string value_csv(const ValueSurface& vs);

}  // namespace stopline
