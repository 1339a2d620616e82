#include "stopline/diffusion.hpp"

#include "stopline/errors.hpp"
#include "stopline/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stopline {

Diffusion::Diffusion() : Diffusion(Expr::constant(0.0), Expr::constant(1.0)) {}

Diffusion::Diffusion(Expr mu, Expr sigma, std::vector<double> breakpoints)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), breakpoints_(std::move(breakpoints)) {
  if (mu_.depends_on(Var::T) || sigma_.depends_on(Var::T))
    throw make_error("SchemaError", "diffusion coefficients must not depend on t");
  mu_x_ = mu_.differentiate(Var::X);
  sigma_x_ = sigma_.differentiate(Var::X);
  sigma_xx_ = sigma_x_.differentiate(Var::X);
  std::sort(breakpoints_.begin(), breakpoints_.end());
}

Expr Diffusion::generator(const Expr& f) const {
  const Expr fx = f.differentiate(Var::X);
  const Expr fxx = fx.differentiate(Var::X);
  return Expr::constant(0.5) * sigma_ * sigma_ * fxx + mu_ * fx;
}

Expr Diffusion::adjoint(const Expr& psi) const {
  const Expr s2psi = sigma_ * sigma_ * psi;
  const Expr mupsi = mu_ * psi;
  return Expr::constant(0.5) * s2psi.differentiate(Var::X).differentiate(Var::X) - mupsi.differentiate(Var::X);
}

double Diffusion::apply_generator(const Expr& f, double x, double t) const {
  if (f.kink_between(t, x, x)) throw KinkAtPoint(x);
  return generator(f).evaluate({t, x});
}

double Diffusion::apply_adjoint(const Expr& psi, double x) const {
  if (psi.kink_between(0.0, x, x)) throw KinkAtPoint(x);
  return adjoint(psi).evaluate({0.0, x});
}

Diffusion Diffusion::mirrored() const {
  const Expr neg_x = -Expr::variable(Var::X);
  std::vector<double> bp;
  for (double b : breakpoints_) bp.push_back(-b);
  return Diffusion(-mu_.substitute(Var::X, neg_x), sigma_.substitute(Var::X, neg_x), bp);
}

double adjoint_duality_gap(const Diffusion& d, const Expr& f, const Expr& psi, double x1, double x2, int n_quad) {
  const double ends = std::fabs(psi.evaluate({0.0, x1})) + std::fabs(psi.evaluate({0.0, x2}));
  if (ends > 1e-12) throw make_error("NotCompactlySupported", "test function does not vanish at the interval ends");
  const Expr lf = d.generator(f);
  const Expr lpsi = d.adjoint(psi);
  const double lhs = simpson([&](double x) { return lf.evaluate({0.0, x}) * psi.evaluate({0.0, x}); }, x1, x2, n_quad);
  const double rhs = simpson([&](double x) { return f.evaluate({0.0, x}) * lpsi.evaluate({0.0, x}); }, x1, x2, n_quad);
  return std::fabs(lhs - rhs);
}

RegularityReport check_regularity(const Diffusion& d, double lo, double hi, int nodes) {
  RegularityReport rep;
  rep.lo = lo;
  rep.hi = hi;
  rep.nodes = nodes;
  rep.min_sigma = std::numeric_limits<double>::infinity();
  if (!(lo < hi) || nodes < 2) {
    rep.failures.push_back("empty audit interval");
    return rep;
  }
  std::vector<double> xs(nodes + 1), mus(nodes + 1), sigmas(nodes + 1);
  std::vector<bool> ok(nodes + 1, true);
  for (int k = 0; k <= nodes; ++k) {
    xs[k] = lo + (hi - lo) * k / nodes;
    try {
      mus[k] = d.drift(xs[k]);
      sigmas[k] = d.vol(xs[k]);
    } catch (const DomainError& e) {
      ok[k] = false;
      if (rep.failures.size() < 8) rep.failures.push_back("DomainError at x=" + std::to_string(xs[k]) + ": " + e.what());
      continue;
    }
    if (sigmas[k] < rep.min_sigma) {
      rep.min_sigma = sigmas[k];
      rep.min_sigma_at = xs[k];
    }
  }
  const auto& bp = d.breakpoints();
  for (int k = 1; k <= nodes; ++k) {
    if (!ok[k] || !ok[k - 1]) continue;
    const bool straddles = std::any_of(bp.begin(), bp.end(), [&](double b) { return b > xs[k - 1] && b <= xs[k]; });
    if (straddles) continue;
    const double h = xs[k] - xs[k - 1];
    rep.max_mu_quotient = std::max(rep.max_mu_quotient, std::fabs(mus[k] - mus[k - 1]) / h);
    rep.max_sigma_quotient = std::max(rep.max_sigma_quotient, std::fabs(sigmas[k] - sigmas[k - 1]) / h);
  }
  if (!(rep.min_sigma > 0.0))
    rep.failures.push_back("sigma not positive: min sigma " + std::to_string(rep.min_sigma) + " at x=" +
                           std::to_string(rep.min_sigma_at));
  if (!std::isfinite(rep.max_mu_quotient) || !std::isfinite(rep.max_sigma_quotient))
    rep.failures.push_back("non-finite difference quotient");
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace stopline
