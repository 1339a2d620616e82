#pragma once

#include <vector>

namespace stopline {

enum class Stretching { Uniform, Geometric };

struct StretchSpec {
  Stretching type = Stretching::Uniform;
  double focus = 0.0;  // node concentration point for Geometric
  double ratio = 1.0;  // largest / smallest cell width for Geometric
};

/// Space nodes x_0 < ... < x_M and uniform time nodes 0 = t_0 < ... < t_N = T.
struct Grid {
  std::vector<double> x;
  std::vector<double> t;

  int M() const { return static_cast<int>(x.size()) - 1; }
  int N() const { return static_cast<int>(t.size()) - 1; }
  double dt() const { return t[1] - t[0]; }
  double dx(int j) const { return x[j + 1] - x[j]; }
  double mean_dx() const { return (x.back() - x.front()) / M(); }
  double horizon() const { return t.back(); }
};

/// Throws Error(BadDomain) unless lo < hi, M >= 16, N >= 16, T > 0.
Grid build_grid(double lo, double hi, int M, int N, double horizon, const StretchSpec& stretch = {});

}  // namespace stopline
