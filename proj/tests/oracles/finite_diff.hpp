#pragma once

// Plain finite-difference formulas used to cross-check symbolic derivatives
// and operators.

#include <functional>

namespace oracle {

inline double central_d1(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_d2(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// Fourth-order central first derivative.
inline double central_d1_4(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

/// sigma(x)^2 / 2 f'' + mu(x) f' by the three-point stencil.
inline double generator_fd(const std::function<double(double)>& f, const std::function<double(double)>& mu,
                           const std::function<double(double)>& sigma, double x, double h) {
  const double s = sigma(x);
  return 0.5 * s * s * central_d2(f, x, h) + mu(x) * central_d1(f, x, h);
}

}  // namespace oracle
