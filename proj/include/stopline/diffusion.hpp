#pragma once

#include "stopline/expr.hpp"

#include <string>
#include <vector>

namespace stopline {

/// Time-homogeneous diffusion dX = mu(X) dt + sigma(X) dB. Coefficients are
/// expressions in x; derivatives are computed once at construction.
class Diffusion {
public:
  Diffusion();
  Diffusion(Expr mu, Expr sigma, std::vector<double> breakpoints = {});

  const Expr& mu() const { return mu_; }
  const Expr& sigma() const { return sigma_; }
  const Expr& mu_x() const { return mu_x_; }
  const Expr& sigma_x() const { return sigma_x_; }
  const Expr& sigma_xx() const { return sigma_xx_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  double drift(double x) const { return mu_.evaluate({0.0, x}); }
  double vol(double x) const { return sigma_.evaluate({0.0, x}); }

  /// sigma^2/2 f'' + mu f'
  Expr generator(const Expr& f) const;
  /// 1/2 (sigma^2 psi)'' - (mu psi)'
  Expr adjoint(const Expr& psi) const;

  double apply_generator(const Expr& f, double x, double t = 0.0) const;
  double apply_adjoint(const Expr& psi, double x) const;

  /// The process -X: drift -mu(-x), volatility sigma(-x).
  Diffusion mirrored() const;

private:
  Expr mu_, sigma_;
  Expr mu_x_, sigma_x_, sigma_xx_;
  std::vector<double> breakpoints_;
};

/// |int (L f) psi - int f (L* psi)| by composite Simpson with n_quad panels.
/// Throws Error(NotCompactlySupported) when psi does not vanish at the ends.
double adjoint_duality_gap(const Diffusion& d, const Expr& f, const Expr& psi, double x1, double x2, int n_quad);

struct RegularityReport {
  bool pass = false;
  double lo = 0.0, hi = 0.0;
  int nodes = 0;
  double min_sigma = 0.0;
  double min_sigma_at = 0.0;
  double max_mu_quotient = 0.0;
  double max_sigma_quotient = 0.0;
  std::vector<std::string> failures;
};

/// Audits sigma > 0 and finiteness of the local difference quotients of mu and
/// sigma on an audit grid; quotients straddling a declared breakpoint are
/// skipped.
RegularityReport check_regularity(const Diffusion& d, double lo, double hi, int nodes = 10000);

}  // namespace stopline
