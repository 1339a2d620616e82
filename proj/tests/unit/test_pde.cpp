#include "doctest.h"
#include "property.hpp"

#include "stopline/errors.hpp"
#include "stopline/grid.hpp"
#include "stopline/pde.hpp"
#include "stopline/problems.hpp"

#include <cmath>

using namespace stopline;

namespace {

ProblemSpec simple(const char* mu, const char* sigma, const char* gain, double lo, double hi) {
  ProblemSpec p;
  p.diffusion = Diffusion(Expr::parse(mu), Expr::parse(sigma));
  p.gain.gain = Expr::parse(gain);
  p.x_lo = lo;
  p.x_hi = hi;
  return p;
}

}  // namespace

TEST_CASE("grid construction") {
  CHECK_THROWS_AS(build_grid(0, 2, 4, 100, 1.0), Error);
  CHECK_THROWS_AS(build_grid(2, 0, 100, 100, 1.0), Error);
  CHECK_THROWS_AS(build_grid(0, 2, 100, 100, 0.0), Error);
  try {
    build_grid(0, 2, 4, 100, 1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == "BadDomain");
  }
  const Grid g = build_grid(0, 2, 200, 100, 1.0);
  CHECK(g.M() == 200);
  CHECK(g.N() == 100);
  CHECK(g.mean_dx() == doctest::Approx(0.01));
  CHECK(g.dt() == doctest::Approx(0.01));
  CHECK(g.t.back() == 1.0);
  CHECK(g.x.back() == 2.0);

  StretchSpec s{Stretching::Geometric, 1.0, 5.0};
  const Grid q = build_grid(0.2, 3.2, 200, 50, 1.0, s);
  double smallest = 1e9;
  int at = 0;
  for (int j = 0; j < q.M(); ++j) {
    REQUIRE(q.dx(j) > 0.0);
    if (q.dx(j) < smallest) {
      smallest = q.dx(j);
      at = j;
    }
  }
  CHECK(std::fabs(q.x[at] - 1.0) < 0.05);
  const double edge = std::max(q.dx(0), q.dx(q.M() - 1));
  CHECK(edge / smallest == doctest::Approx(5.0).epsilon(0.05));
  CHECK(q.x.front() == 0.2);
  CHECK(q.x.back() == 3.2);
}

TEST_CASE("martingale gain is stopped everywhere") {
  const auto p = catalog("harmonic_allstop");
  const auto vs = solve_vi(p, build_grid(p.x_lo, p.x_hi, 100, 100, p.horizon));
  for (std::size_t k = 0; k < vs.V.size(); ++k) {
    CHECK(std::fabs(vs.V[k] - vs.G[k]) <= 1e-10);
    CHECK(vs.indicator[k] == Phase::Stop);
  }
}

TEST_CASE("obstacle, complementarity and terminal invariants on the catalog") {
  for (const auto& id : catalog_ids()) {
    const auto p = catalog(id);
    const auto g = build_grid(p.x_lo, p.x_hi, 100, 100, p.horizon);
    const auto vs = p.constrained ? solve_vi(p, g) : solve_unconstrained(p, g);
    const auto a = audit_surface(vs);
    INFO(id);
    if (p.constrained) CHECK(a.min_v_minus_g >= -1e-9);
    CHECK(a.max_complementarity <= 1e-8);
    CHECK(a.max_terminal_error == 0.0);
  }
}

TEST_CASE("unconstrained examples") {
  {
    const auto p = catalog("heat_unconstrained");
    const auto vs = solve_unconstrained(p, build_grid(p.x_lo, p.x_hi, 200, 200, p.horizon));
    CHECK(std::fabs(interpolate(vs, 0.0, 0.0) - 1.0) < 2e-3);
    for (Phase ph : vs.indicator) CHECK(ph == Phase::Continue);
  }
  {
    auto p = simple("0.3*x", "0.4*x", "2.5", 0.1, 4.0);
    const auto vs = solve_unconstrained(p, build_grid(p.x_lo, p.x_hi, 64, 32, 1.0));
    for (double v : vs.V) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  }
  {
    auto p = simple("0.1*x", "0.3*x", "x", 0.0, 6.0);
    p.bc_lo = p.bc_hi = SideBc::Linear;
    const auto vs = solve_unconstrained(p, build_grid(p.x_lo, p.x_hi, 300, 200, 1.0));
    for (double t : {0.0, 0.5}) {
      for (double x : {0.8, 1.0, 1.7}) {
        const double exact = x * std::exp(0.1 * (1.0 - t));
        CHECK(std::fabs(interpolate(vs, t, x) - exact) <= 1e-3 * exact);
      }
    }
  }
}

TEST_CASE("time-independent gain gives a t-monotone value") {
  const auto p = catalog("time_indep_c1");
  const auto vs = solve_vi(p, build_grid(p.x_lo, p.x_hi, 120, 120, p.horizon));
  const int M = vs.grid.M();
  for (int i = 0; i < vs.grid.N(); ++i)
    for (int j = 0; j <= M; ++j) CHECK(vs.v(i, j) >= vs.v(i + 1, j) - 1e-10);
}

TEST_CASE("storage convention and indicator") {
  const auto p = catalog("american_put");
  const auto vs = solve_vi(p, build_grid(p.x_lo, p.x_hi, 100, 50, p.horizon));
  for (std::size_t k = 0; k < vs.V.size(); ++k) {
    const bool stop = vs.V[k] - vs.G[k] <= vs.tol_indicator;
    CHECK((vs.indicator[k] == Phase::Stop) == stop);
  }
  CHECK(vs.tol_indicator == doctest::Approx(10 * vs.tol_psor));
  const std::string csv = value_csv(vs);
  CHECK(csv.rfind("t,x,V,G,indicator,residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 51 * 101);
}

TEST_CASE("put value converges under refinement") {
  const auto p = catalog("american_put");
  std::vector<double> v;
  for (int m : {100, 200, 400, 800}) v.push_back(interpolate(solve_vi(p, build_grid(p.x_lo, p.x_hi, m, m, 1.0)), 0, 1));
  const double d1 = std::fabs(v[1] - v[0]), d2 = std::fabs(v[2] - v[1]), d3 = std::fabs(v[3] - v[2]);
  CHECK(d2 <= d1 / 2.0);
  CHECK(d3 <= d2 / 2.0);
}

TEST_CASE("property: adding a constant to G shifts V by that constant when r = 0") {
  prop::for_all(4, 21, [](prop::Gen& g, int) {
    const double c = std::stod(std::to_string(g.uniform(-2, 2)));
    const double k = g.uniform(0.8, 1.2);
    auto p = simple("0.02*x", "0.25*x", "0", 0.2, 3.0);
    p.gain.gain = Expr::parse("pos(" + std::to_string(k) + " - x)");
    auto q = p;
    q.gain.gain = Expr::parse("pos(" + std::to_string(k) + " - x) + " + std::to_string(c));
    const Grid grid = build_grid(p.x_lo, p.x_hi, 80, 40, 1.0);
    Scheme sharp;
    sharp.psor.tol = 1e-12;
    const auto a = solve_vi(p, grid, sharp);
    const auto b = solve_vi(q, grid, sharp);
    double worst = 0.0;
    for (std::size_t n = 0; n < a.V.size(); ++n) worst = std::max(worst, std::fabs(b.V[n] - a.V[n] - c));
    CHECK(worst <= 1e-10);
  });
}

TEST_CASE("scheme validation and PSOR failure") {
  const auto p = catalog("american_put");
  const Grid g = build_grid(p.x_lo, p.x_hi, 100, 50, 1.0);
  Scheme bad;
  bad.theta = 0.3;
  CHECK_THROWS_AS(solve_vi(p, g, bad), Error);
  Scheme tight;
  tight.psor.max_iter = 1;
  try {
    solve_vi(p, g, tight);
    FAIL("expected PsorDiverged");
  } catch (const Error& e) {
    CHECK(e.kind() == "PsorDiverged");
    CHECK(std::string(e.what()).find("x=") != std::string::npos);
  }
}

TEST_CASE("mirrored problem has mirrored values") {
  const auto p = catalog("american_put");
  const auto m = mirror(p);
  CHECK(m.orientation == Orientation::StopAbove);
  const auto a = solve_vi(p, build_grid(p.x_lo, p.x_hi, 100, 50, 1.0));
  const auto b = solve_vi(m, build_grid(m.x_lo, m.x_hi, 100, 50, 1.0));
  for (double x : {0.7, 1.0, 1.4}) CHECK(interpolate(b, 0.2, -x) == doctest::Approx(interpolate(a, 0.2, x)).epsilon(1e-9));
}
