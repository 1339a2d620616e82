#pragma once

#include "stopline/diffusion.hpp"
#include "stopline/expr.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stopline {

struct GainSpec {
  Expr gain;                     // G(t, x), used for t < T
  std::optional<Expr> terminal;  // h(x) at t = T when distinct from G
  Expr discount;                 // r(x) >= 0
  Expr cost;                     // C(t, x) >= 0
  std::vector<double> kinks;     // declared kink abscissae of G

  double terminal_value(double horizon, double x) const {
    return terminal ? terminal->evaluate({horizon, x}) : gain.evaluate({horizon, x});
  }
  bool time_independent() const;
};

/// H = G_t + L_X G - r G - C and its x-derivative for a fixed diffusion.
class GainModel {
public:
  GainModel(GainSpec spec, Diffusion diffusion);

  const GainSpec& spec() const { return spec_; }
  const Diffusion& diffusion() const { return diffusion_; }
  const Expr& H() const { return h_; }
  /// Throws NonDifferentiable when a named function lacks a derivative.
  const Expr& Hx() const;

  double eval_H(double t, double x) const;
  double eval_Hx(double t, double x) const;

  /// True when a declared kink or a kink of H lies in [xa, xb] at time t.
  bool near_kink(double t, double xa, double xb) const;

  /// Sorted kink abscissae of G and H in [lo, hi] at time t, declared ones included.
  std::vector<double> kinks(double t, double lo, double hi, int n = 2000) const;

private:
  GainSpec spec_;
  Diffusion diffusion_;
  Expr h_;
  std::optional<Expr> hx_;
  std::string hx_error_;
};

struct GainAudit {
  bool pass = true;
  std::vector<std::string> failures;
};

/// Checks evaluability of G (and h), r >= 0 and C >= 0 on an audit grid.
GainAudit audit_gain(const GainSpec& spec, double horizon, double lo, double hi, int nodes = 2000);

}  // namespace stopline
