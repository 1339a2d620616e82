#include "doctest.h"
#include "property.hpp"

#include "stopline/errors.hpp"
#include "stopline/montecarlo.hpp"
#include "stopline/problems.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>

using namespace stopline;

namespace {

ProblemSpec bm(const char* gain, const char* cost = "0") {
  ProblemSpec p;
  p.diffusion = Diffusion(Expr::parse("0"), Expr::parse("1"));
  p.gain.gain = Expr::parse(gain);
  p.gain.cost = Expr::parse(cost);
  p.x_lo = -6;
  p.x_hi = 6;
  return p;
}

Boundary constant_boundary(double level, Orientation o, int n = 64) {
  Boundary b;
  b.orientation = o;
  b.horizon = 1.0;
  b.dt = 1.0 / n;
  b.dx = 0.01;
  for (int i = 0; i < n; ++i) {
    b.t.push_back(static_cast<double>(i) / n);
    b.b.push_back(level);
    b.coarse.push_back(level);
    b.multiplicity.push_back(std::isfinite(level) ? 1 : 0);
    b.stop_node.push_back(-1);
    b.far_field.push_back(false);
  }
  return b;
}

}  // namespace

TEST_CASE("path seeds are reproducible and distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 10000; ++k) seen.insert(path_seed(20260101, k));
  CHECK(seen.size() == 10000);
  CHECK(path_seed(1, 2) == path_seed(1, 2));
  CHECK(path_seed(1, 2) != path_seed(2, 1));
}

TEST_CASE("summarize") {
  const auto e = summarize({1.0, 2.0, 3.0, 4.0}, 7);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(e.n == 4);
  CHECK(e.seed == 7);
  const std::string js = estimate_json(e);
  CHECK(js.find("\"mean\"") != std::string::npos);
  CHECK(js.find("\"se\"") != std::string::npos);
}

TEST_CASE("Euler paths: layout, moments and domain flag") {
  const Diffusion d(Expr::parse("0"), Expr::parse("1"));
  const auto a = simulate_paths(d, 0.5, 1.0, 0.03, 20000, 11, std::make_pair(-1.0, 2.0));
  CHECK(a.steps == 34);
  CHECK(a.dt == doctest::Approx(1.0 / 34));
  double s = 0.0, s2 = 0.0;
  int left = 0;
  for (int p = 0; p < a.n; ++p) {
    CHECK(a.at(p, 0) == 0.5);
    const double x = a.at(p, a.steps) - 0.5;
    s += x;
    s2 += x * x;
    left += a.left_domain[p];
  }
  const double mean = s / a.n;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(a.n));
  CHECK(s2 / a.n == doctest::Approx(1.0).epsilon(0.04));
  CHECK(left > 0);
  CHECK(left < a.n);
  const auto b = simulate_paths(d, 0.5, 1.0, 0.03, 20000, 11, std::make_pair(-1.0, 2.0));
  CHECK(a.X == b.X);
}

TEST_CASE("estimates do not depend on the worker count") {
  const auto p = catalog("american_put");
  const auto b = constant_boundary(0.85, p.orientation);
  setenv("STOPLINE_THREADS", "1", 1);
  const auto one = estimate_value_with_boundary(p, b, 0.0, 1.0, 4000, 3, 0.01);
  setenv("STOPLINE_THREADS", "5", 1);
  const auto five = estimate_value_with_boundary(p, b, 0.0, 1.0, 4000, 3, 0.01);
  unsetenv("STOPLINE_THREADS");
  CHECK(one.mean == five.mean);
  CHECK(one.se == five.se);
}

TEST_CASE("value with a boundary: limiting rules") {
  const auto p = bm("x");
  const auto never = estimate_value_with_boundary(p, constant_boundary(-std::numeric_limits<double>::infinity(), p.orientation), 0.0, 0.3, 20000, 5, 0.01);
  CHECK(std::fabs(never.mean - 0.3) <= 4 * never.se);
  const auto now = estimate_value_with_boundary(bm("x*x"), constant_boundary(std::numeric_limits<double>::infinity(), p.orientation), 0.2, 0.3, 100, 5, 0.01);
  CHECK(now.mean == doctest::Approx(0.09));
  CHECK(now.se < 1e-15);
  const auto c = estimate_value_with_boundary(bm("1", "1"), constant_boundary(-std::numeric_limits<double>::infinity(), p.orientation), 0.25, 0.0, 50, 5, 0.01);
  CHECK(c.mean == doctest::Approx(1.0 - 0.75));
  try {
    estimate_value_with_boundary(p, constant_boundary(0.0, Orientation::StopAbove), 0.0, 0.0, 10, 1, 0.01);
    FAIL("expected OrientationMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == "OrientationMismatch");
  }
}

TEST_CASE("xi examples") {
  const auto one = estimate_xi(bm("0", "1"), 1.0, 0.25, 0.0, 200, 9, 0.01);
  CHECK(one.mean == doctest::Approx(0.75).epsilon(1e-12));
  const auto sq = estimate_xi(bm("0", "x*x"), 1.0, 0.0, 0.0, 40000, 9, 0.005);
  CHECK(std::fabs(sq.mean - 0.5) <= 4 * sq.se + 0.01);
}

TEST_CASE("kappa examples") {
  const auto c = estimate_kappa(bm("2"), 1.5, 0.0, 0.0, 100, 4, 0.01);
  CHECK(c.mean == doctest::Approx(std::pow(2.0, 1.5)));
  std::vector<double> samples;
  const auto k = estimate_kappa(bm("x"), 2.0, 0.0, 0.0, 20000, 4, 0.01, &samples);
  CHECK(samples.size() == 20000);
  // Doob: E W_1^2 <= E sup |W|^2 <= 4 E W_1^2
  CHECK(k.mean > 1.0);
  CHECK(k.mean < 4.0);
  CHECK_THROWS_AS(estimate_kappa(bm("x"), 1.0, 0.0, 0.0, 10, 4, 0.01), Error);
}

TEST_CASE("sup deviation study on Brownian motion") {
  const Diffusion d(Expr::parse("0"), Expr::parse("1"));
  const auto s = sup_deviation_study(d, 0.0, 1.0, {1.0, 0.25, 0.0625}, 40000, 17, 64);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0].probability.mean > s.rows[1].probability.mean);
  CHECK(s.rows[1].probability.mean > s.rows[2].probability.mean);
  REQUIRE(s.slope.size() == 2);
  CHECK(s.slope[0] == doctest::Approx(0.5).epsilon(0.05));
  CHECK(s.slope[1] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(s.bound_holds);
}

TEST_CASE("property: sup deviation probability is monotone in eta") {
  const Diffusion d(Expr::parse("0.1 * x"), Expr::parse("0.5"));
  prop::for_all(6, 8, [&](prop::Gen& g, int) {
    const double y = g.uniform(-1, 1);
    const double h = g.uniform(0.1, 1.0);
    const double eta = g.uniform(0.1, 0.6);
    const auto a = estimate_sup_deviation(d, y, h, eta, 4000, 2, 32);
    const auto b = estimate_sup_deviation(d, y, h, eta * 1.5, 4000, 2, 32);
    CHECK(a.mean >= b.mean);
    CHECK(a.mean <= 1.0);
  });
}
