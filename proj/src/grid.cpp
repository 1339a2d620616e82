#include "stopline/grid.hpp"

#include "stopline/errors.hpp"

#include <cmath>
#include <string>

namespace stopline {

namespace {

// x(s) = focus + a * sinh(c (s - s0)) on s in [0, 1], with s0 chosen so the
// end points land on lo and hi. Cell widths scale like cosh(c (s - s0)).
double solve_offset(double c, double lo, double hi, double focus) {
  const double target = (hi - focus) / (focus - lo);
  double a = 1e-12;
  double b = 1.0 - 1e-12;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double r = std::sinh(c * (1.0 - m)) / std::sinh(c * m);
    if (r > target) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

std::vector<double> geometric_nodes(double lo, double hi, int M, double focus, double ratio) {
  if (!(focus > lo && focus < hi)) throw make_error("BadDomain", "geometric focus must lie inside the domain");
  auto edge_ratio = [&](double c) {
    const double s0 = solve_offset(c, lo, hi, focus);
    return std::cosh(c * std::fmax(s0, 1.0 - s0));
  };
  double ca = 1e-8;
  double cb = 1.0;
  while (edge_ratio(cb) < ratio && cb < 700.0) cb *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (ca + cb);
    if (edge_ratio(m) < ratio) ca = m; else cb = m;
  }
  const double c = 0.5 * (ca + cb);
  const double s0 = solve_offset(c, lo, hi, focus);
  const double a = (hi - focus) / std::sinh(c * (1.0 - s0));
  std::vector<double> x(M + 1);
  for (int j = 0; j <= M; ++j) x[j] = focus + a * std::sinh(c * (static_cast<double>(j) / M - s0));
  x.front() = lo;
  x.back() = hi;
  return x;
}

}  // namespace

Grid build_grid(double lo, double hi, int M, int N, double horizon, const StretchSpec& stretch) {
  if (!(lo < hi)) throw make_error("BadDomain", "domain requires x_lo < x_hi");
  if (M < 16 || N < 16)
    throw make_error("BadDomain", "grid requires M >= 16 and N >= 16 (got " + std::to_string(M) + "x" +
                                      std::to_string(N) + ")");
  if (!(horizon > 0.0)) throw make_error("BadDomain", "horizon must be positive");
  Grid g;
  if (stretch.type == Stretching::Geometric && stretch.ratio > 1.0) {
    g.x = geometric_nodes(lo, hi, M, stretch.focus, stretch.ratio);
  } else {
    g.x.resize(M + 1);
    for (int j = 0; j <= M; ++j) g.x[j] = lo + (hi - lo) * j / M;
  }
  g.t.resize(N + 1);
  for (int i = 0; i <= N; ++i) g.t[i] = horizon * i / N;
  g.t.back() = horizon;
  return g;
}

}  // namespace stopline
