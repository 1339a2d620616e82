#pragma once

#include "stopline/boundary.hpp"
#include "stopline/gain.hpp"
#include "stopline/pde.hpp"
#include "stopline/problem.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace stopline {

/// Normalized bump kappa * exp(-1 / (1 - ((x - c) / rho)^2)) on (c - rho, c + rho).
class TestFunction {
public:
  TestFunction(double center, double radius);

  double center() const { return c_; }
  double radius() const { return rho_; }
  double kappa() const { return kappa_; }
  double lo() const { return c_ - rho_; }
  double hi() const { return c_ + rho_; }
  const Expr& expr() const { return expr_; }
  double operator()(double x) const { return expr_.evaluate({0.0, x}); }

private:
  double c_, rho_, kappa_;
  Expr expr_;
};

/// Time slices [i1, i2] of a boundary the audits run over.
struct SliceRange {
  int i1 = 0;
  int i2 = -1;  // -1: up to the last slice
};

struct CollarWidth {
  double eps = 0.0;
  double ell = 0.0;
};

struct C1Result {
  double ell_eps = 0.0;
  bool pass = false;
  double eps_collar = 0.0;
  double ell_min = 0.0;
  long nodes = 0;
  int slices = 0;
  double worst_t = 0.0;
  double worst_x = 0.0;
  std::vector<CollarWidth> sensitivity;  // eps/2, eps, 2 eps
};

/// inf of -H over the continuation-side collar {0 <= +-(x - b) <= eps} of each
/// usable slice, starting at the last STOP node. Nodes within two cells of a
/// kink of G or H are skipped. Throws Error(EmptyCollar).
C1Result check_C1(const GainModel& gm, const ValueSurface& vs, const Boundary& b, double eps_collar,
                  double ell_min = 1e-6, SliceRange range = {});

struct C2Result {
  double ell_prime_eps = 0.0;  // inf H_x (sup for STOP_ABOVE, reported with sign)
  double min_vxgx = 0.0;       // min V_x - G_x (max for STOP_ABOVE)
  bool pass = false;
  long nodes = 0;
  double eps_collar = 0.0;
};

/// Same collar as check_C1. STOP_BELOW passes iff inf H_x >= ell_min and
/// V_x - G_x >= -vx_tol; STOP_ABOVE uses the reversed inequalities.
C2Result check_C2(const GainModel& gm, const ValueSurface& vs, const Boundary& b, double eps_collar,
                  double ell_min = 1e-6, double vx_tol = 1e-6, SliceRange range = {});

struct CurvePoint {
  double at = 0.0;
  double value = 0.0;
};

struct HolderEstimate {
  double alpha = 0.0;
  double exp_x = 0.0;  // sup |V(t, x + h') - V(t, x)| ~ h'^exp_x
  double exp_t = 0.0;  // sup |V(t + h, x) - V(t, x)| ~ h^exp_t
  double r2_x = 0.0;
  double r2_t = 0.0;
  bool t_flat = false;  // no time increments above round-off
  bool pass = false;
  long samples = 0;
  std::vector<CurvePoint> lag_x;      // (h', sup increment)
  std::vector<CurvePoint> lag_t;      // (h, sup increment)
  std::vector<CurvePoint> theta1;     // over |x|: sup_t increment / h^(alpha/2)
  std::vector<CurvePoint> theta2;     // over t: sup_x increment / h'^alpha
};

/// Log-log fits of the largest lagged increments over roughly `sample_count`
/// strided nodes inside [x_lo, x_hi]. Throws Error(InsufficientSamples).
HolderEstimate estimate_modulus_C3(const ValueSurface& vs, int sample_count, std::pair<double, double> window);

struct KappaPoint {
  double t = 0.0;
  double integral = 0.0;
};

struct C4Result {
  double delta = 2.0;
  double R = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  int x_nodes = 0;
  int paths = 0;
  double dt_mc = 0.0;
  std::uint64_t seed = 0;
  double value = 0.0;  // sup over t of the integral
  double t_at_sup = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int bootstrap = 0;
  bool pass = false;
  std::vector<KappaPoint> per_t;
};

/// sup_t int_{[-R, R] within the domain} kappa(t, x)^(1/delta) dx by trapezoid
/// over x_nodes points, kappa from estimate_kappa, with a percentile
/// bootstrap interval. PASS iff finite with CI width below 10% of the value.
C4Result check_C4(const ProblemSpec& p, double delta, double R, const std::vector<double>& t_samples, int mc_n,
                  std::uint64_t seed, double dt_mc, int x_nodes = 21, int bootstrap = 200);

/// int 1{L* psi >= 0} theta (L* psi) dy by composite Simpson over the support.
double gamma_functional(const Diffusion& d, const Expr& theta, const TestFunction& psi, int n_quad);

struct FPsiSeries {
  std::vector<double> t;
  std::vector<double> adjoint;  // -int H_x psi + int u d/dx(A* psi) + int r' u psi
  std::vector<double> direct;   // int (u_x)_t psi from finite differences
};

/// Slices i_lo < i < i_hi; every node of the rectangle must be CONTINUE.
/// Throws Error(RectOutsideContinuation).
FPsiSeries F_psi_series(const GainModel& gm, const ValueSurface& vs, const TestFunction& psi, int i_lo, int i_hi,
                        double x_lo, double x_hi);

enum class Verdict { T31_OK, T32_OK, T33_OK, PROP_OK, INCONCLUSIVE };
const char* to_string(Verdict v);

struct SegmentChecks {
  MonotoneSegment segment;
  bool c1 = false;
  bool c2 = false;
  bool c3 = false;
  bool c4 = false;
};

struct SegmentVerdict {
  MonotoneSegment segment;
  Verdict verdict = Verdict::INCONCLUSIVE;
  std::string reason;  // first failing hypothesis for INCONCLUSIVE
  std::string label = "numerical evidence";
};

std::vector<SegmentVerdict> continuity_verdict(const std::vector<SegmentChecks>& checks, bool time_independent);

}  // namespace stopline
