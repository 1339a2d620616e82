#include "doctest.h"
#include "property.hpp"

#include "stopline/conditions.hpp"
#include "stopline/errors.hpp"
#include "stopline/grid.hpp"
#include "stopline/problems.hpp"
#include "stopline/quadrature.hpp"

#include <cmath>
#include <functional>

using namespace stopline;

namespace {

ProblemSpec bm(const char* gain, double lo = -3.0, double hi = 3.0) {
  ProblemSpec p;
  p.diffusion = Diffusion(Expr::parse("0"), Expr::parse("1"));
  p.gain.gain = Expr::parse(gain);
  p.x_lo = lo;
  p.x_hi = hi;
  return p;
}

// Continuation everywhere with V - G = u(t, x) and G = 0.
ValueSurface surface_of(const std::function<double(double, double)>& u, int M, int N) {
  ValueSurface vs;
  vs.grid = build_grid(-3.0, 3.0, M, N, 1.0);
  const std::size_t total = static_cast<std::size_t>(N + 1) * (M + 1);
  vs.V.assign(total, 0.0);
  vs.G.assign(total, 0.0);
  vs.residual.assign(total, 0.0);
  vs.pde_residual.assign(total, 0.0);
  vs.indicator.assign(total, Phase::Continue);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= M; ++j) vs.V[vs.at(i, j)] = u(vs.grid.t[i], vs.grid.x[j]);
  return vs;
}

struct Solved {
  ProblemSpec p;
  ValueSurface vs;
  Boundary b;
};

Solved solve(const std::string& id, int m) {
  Solved s{catalog(id), {}, {}};
  s.vs = solve_vi(s.p, build_grid(s.p.x_lo, s.p.x_hi, m, m, s.p.horizon));
  ExtractOptions opt;
  opt.window = s.p.window;
  s.b = refine_boundary(s.vs, s.p.orientation, opt);
  return s;
}

SliceRange early(const Boundary& b) {
  int last = 0;
  while (last + 1 < b.size() && b.t[last + 1] <= 0.95 * b.horizon) ++last;
  return {0, last};
}

}  // namespace

TEST_CASE("test function normalization and support") {
  for (double rho : {0.05, 0.3, 1.0}) {
    const TestFunction psi(0.4, rho);
    const double mass = simpson([&](double x) { return psi(x); }, psi.lo(), psi.hi(), 20000);
    CHECK(std::fabs(mass - 1.0) <= 1e-10);
    CHECK(psi(psi.lo() - 1e-3) == 0.0);
    CHECK(psi(psi.hi() + 1e-3) == 0.0);
    CHECK(psi(0.4) > 0.0);
    CHECK(psi(psi.lo()) == 0.0);
    CHECK(psi(psi.hi()) == 0.0);
  }
}

TEST_CASE("gamma functional") {
  const Diffusion d(Expr::parse("0.2*x"), Expr::parse("0.5 + 0.1*x^2"));
  const TestFunction psi(0.3, 0.4);
  CHECK(gamma_functional(d, Expr::parse("0"), psi, 2000) == 0.0);
  prop::for_all(10, 3, [&](prop::Gen& g, int) {
    const double a = g.uniform(0.1, 3.0);
    const double c = g.uniform(0.0, 2.0);
    const std::string th = std::to_string(a) + " + " + std::to_string(c) + "*x^2";
    const double one = gamma_functional(d, Expr::parse(th), psi, 2000);
    const double two = gamma_functional(d, Expr::parse("2*(" + th + ")"), psi, 2000);
    CHECK(one >= 0.0);
    CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-12));
  });
}

TEST_CASE("F_psi routes agree on synthetic surfaces") {
  const auto p = bm("0");
  const GainModel gm(p.gain, p.diffusion);
  const TestFunction psi(0.1, 0.5);
  {
    const auto vs = surface_of([](double t, double x) { return (t - 0.3) * x + 5.0; }, 600, 200);
    const auto f = F_psi_series(gm, vs, psi, 10, 190, -1.0, 1.0);
    REQUIRE(f.t.size() == 179);
    for (double v : f.direct) CHECK(std::fabs(v - 1.0) <= 1e-6);
  }
  {
    const auto vs = surface_of([](double t, double x) { return std::exp(0.5 * t) * std::sin(x) + 3.0; }, 600, 200);
    const auto f = F_psi_series(gm, vs, psi, 10, 190, -1.0, 1.0);
    const double ic = simpson([&](double x) { return std::cos(x) * psi(x); }, psi.lo(), psi.hi(), 4000);
    for (std::size_t k = 0; k < f.t.size(); ++k) {
      const double exact = 0.5 * std::exp(0.5 * f.t[k]) * ic;
      CHECK(std::fabs(f.adjoint[k] - exact) <= 1e-5);
      CHECK(std::fabs(f.direct[k] - exact) <= 1e-4);
    }
  }
  {
    const auto vs = surface_of([](double, double) { return 1.0; }, 200, 50);
    const auto f = F_psi_series(gm, vs, psi, 0, 50, -1.0, 1.0);
    for (std::size_t k = 0; k < f.t.size(); ++k) {
      CHECK(std::fabs(f.adjoint[k]) <= 1e-9);
      CHECK(std::fabs(f.direct[k]) <= 1e-12);
    }
  }
}

TEST_CASE("F_psi rectangle validation") {
  const auto p = bm("0");
  const GainModel gm(p.gain, p.diffusion);
  auto vs = surface_of([](double, double) { return 1.0; }, 200, 50);
  vs.indicator[vs.at(20, 100)] = Phase::Stop;
  const TestFunction psi(0.0, 0.5);
  try {
    F_psi_series(gm, vs, psi, 10, 30, -1.0, 1.0);
    FAIL("expected RectOutsideContinuation");
  } catch (const Error& e) {
    CHECK(e.kind() == "RectOutsideContinuation");
  }
  CHECK_THROWS_AS(F_psi_series(gm, vs, psi, 30, 31, -1.0, 1.0), Error);
  CHECK_THROWS_AS(F_psi_series(gm, vs, psi, 30, 40, -0.2, 1.0), Error);
}

TEST_CASE("F_psi routes agree on the mirrored put inside its continuation region") {
  const auto p = mirror(catalog("american_put"));
  const auto vs = solve_vi(p, build_grid(p.x_lo, p.x_hi, 1600, 800, p.horizon));
  const GainModel gm(p.gain, p.diffusion);
  const TestFunction psi(-0.94, 0.045);
  const auto f = F_psi_series(gm, vs, psi, 0, 300, -0.99, -0.89);
  double worst = 0.0;
  for (std::size_t k = 0; k < f.t.size(); ++k)
    worst = std::max(worst, std::fabs(f.adjoint[k] - f.direct[k]) / std::fabs(f.direct[k]));
  CHECK(worst <= 0.05);
}

TEST_CASE("C1 on the put passes and tracks a constant shift of G through the discount") {
  auto s = solve("american_put", 200);
  const GainModel gm(s.p.gain, s.p.diffusion);
  const double eps = 5 * s.vs.grid.mean_dx();
  const auto c1 = check_C1(gm, s.vs, s.b, eps, 1e-6, early(s.b));
  CHECK(c1.pass);
  CHECK(c1.ell_eps == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(c1.nodes > 0);
  REQUIRE(c1.sensitivity.size() == 3);
  CHECK(c1.sensitivity[1].eps == doctest::Approx(eps));

  auto shifted = s;
  shifted.p.gain.gain = s.p.gain.gain + Expr::constant(0.25);
  for (double& v : shifted.vs.V) v += 0.25;
  for (double& g : shifted.vs.G) g += 0.25;
  const GainModel gm2(shifted.p.gain, shifted.p.diffusion);
  const auto c1s = check_C1(gm2, shifted.vs, shifted.b, eps, 1e-6, early(s.b));
  CHECK(c1s.ell_eps == doctest::Approx(c1.ell_eps + 0.05 * 0.25).epsilon(1e-9));
  CHECK(c1s.nodes == c1.nodes);

  CHECK_THROWS_AS(check_C1(gm, s.vs, s.b, eps, 1e-6, {5, 2}), Error);
}

TEST_CASE("C1 fails on the Cox-Peskir plateau") {
  auto s = solve("coxpeskir_plateau", 200);
  const GainModel gm(s.p.gain, s.p.diffusion);
  const auto c1 = check_C1(gm, s.vs, s.b, 0.125, 1e-6, early(s.b));
  CHECK_FALSE(c1.pass);
  CHECK(c1.ell_eps <= 1e-9);
}

TEST_CASE("C2 on the put sees a flat H_x") {
  auto s = solve("american_put", 200);
  const GainModel gm(s.p.gain, s.p.diffusion);
  const auto c2 = check_C2(gm, s.vs, s.b, 5 * s.vs.grid.mean_dx(), 1e-6, 1e-6, early(s.b));
  CHECK(c2.nodes > 0);
  CHECK(std::fabs(c2.ell_prime_eps) <= 1e-9);
  CHECK_FALSE(c2.pass);
}

TEST_CASE("C3 modulus on the put") {
  auto s = solve("american_put", 200);
  const auto h = estimate_modulus_C3(s.vs, 2000, {s.p.x_lo, s.p.x_hi});
  CHECK(h.pass);
  CHECK(h.alpha > 0.0);
  CHECK(h.alpha <= 1.0);
  CHECK(h.r2_x >= 0.9);
  CHECK(h.lag_x.size() >= 3);
  CHECK(h.theta1.size() == 20);
  CHECK_THROWS_AS(estimate_modulus_C3(s.vs, 2000, {0.99, 1.0}), Error);
}

TEST_CASE("C4 integrability examples") {
  const auto one = check_C4(bm("1", -4, 4), 2.0, 2.0, {0.0, 0.5}, 200, 1, 0.02, 21, 50);
  CHECK(one.value == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(one.pass);
  CHECK(one.x_lo == -2.0);
  CHECK(one.x_hi == 2.0);
  CHECK(one.per_t.size() == 2);

  ProblemSpec gbm;
  gbm.diffusion = Diffusion(Expr::parse("0.05*x"), Expr::parse("0.2*x"));
  gbm.gain.gain = Expr::parse("x");
  gbm.x_lo = 0.1;
  gbm.x_hi = 4.0;
  const auto g = check_C4(gbm, 2.0, 2.0, {0.0, 0.5}, 2000, 2, 0.01, 21, 100);
  CHECK(std::isfinite(g.value));
  CHECK(g.x_lo == 0.1);
  CHECK(g.ci_lo <= g.value);
  CHECK(g.value <= g.ci_hi);
  CHECK(g.pass);
}

TEST_CASE("verdict rules") {
  auto seg = [](Direction d) {
    MonotoneSegment s;
    s.direction = d;
    return s;
  };
  auto run = [&](Direction d, bool c1, bool c2, bool c3, bool c4, bool ti) {
    return continuity_verdict({{seg(d), c1, c2, c3, c4}}, ti).front();
  };
  CHECK(run(Direction::Increasing, true, false, false, false, true).verdict == Verdict::PROP_OK);
  CHECK(run(Direction::Increasing, true, false, true, true, false).verdict == Verdict::T32_OK);
  CHECK(run(Direction::Increasing, true, false, true, false, false).verdict == Verdict::T31_OK);
  CHECK(run(Direction::Decreasing, false, true, false, false, false).verdict == Verdict::T33_OK);
  CHECK(run(Direction::Flat, false, true, false, false, false).verdict == Verdict::T33_OK);
  const auto a = run(Direction::Increasing, false, false, true, true, false);
  CHECK(a.verdict == Verdict::INCONCLUSIVE);
  CHECK(a.reason == "C.1");
  CHECK(run(Direction::Increasing, true, false, false, false, false).reason == "C.3/C.4");
  CHECK(run(Direction::Decreasing, true, false, true, true, false).reason == "C.2");
  CHECK(a.label == "numerical evidence");
  CHECK(std::string(to_string(Verdict::T32_OK)) == "T32_OK");
  CHECK(std::string(to_string(Verdict::INCONCLUSIVE)) == "INCONCLUSIVE");
}
