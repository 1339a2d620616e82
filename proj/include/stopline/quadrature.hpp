#pragma once

#include <cmath>
#include <span>

namespace stopline {

/// Composite Simpson rule on [a, b] with `panels` subintervals (rounded up to
/// an even count).
template <class F>
double simpson(F&& f, double a, double b, int panels) {
  if (panels < 2) panels = 2;
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double odd = 0.0;
  double even = 0.0;
  for (int k = 1; k < panels; ++k) {
    const double v = f(a + (b - a) * k / panels);
    (k % 2 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

/// Trapezoid rule over tabulated values on a possibly non-uniform grid.
inline double trapezoid(std::span<const double> xs, std::span<const double> ys) {
  double s = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k) s += 0.5 * (xs[k] - xs[k - 1]) * (ys[k] + ys[k - 1]);
  return s;
}

}  // namespace stopline
