#include "stopline/gain.hpp"

#include "stopline/errors.hpp"

#include <algorithm>
#include <cmath>

namespace stopline {

bool GainSpec::time_independent() const {
  return !gain.depends_on(Var::T) && discount.is_zero() && cost.is_zero() && !terminal;
}

GainModel::GainModel(GainSpec spec, Diffusion diffusion) : spec_(std::move(spec)), diffusion_(std::move(diffusion)) {
  const Expr& g = spec_.gain;
  h_ = g.differentiate(Var::T) + diffusion_.generator(g) - spec_.discount * g - spec_.cost;
  try {
    hx_ = h_.differentiate(Var::X);
  } catch (const NonDifferentiable& e) {
    hx_error_ = e.what();
  }
}

const Expr& GainModel::Hx() const {
  if (!hx_) throw make_error("NonDifferentiable", hx_error_);
  return *hx_;
}

bool GainModel::near_kink(double t, double xa, double xb) const {
  const auto& k = spec_.kinks;
  if (std::any_of(k.begin(), k.end(), [&](double p) { return p >= xa && p <= xb; })) return true;
  return h_.kink_between(t, xa, xb) || spec_.gain.kink_between(t, xa, xb);
}

std::vector<double> GainModel::kinks(double t, double lo, double hi, int n) const {
  std::vector<double> out;
  for (double k : spec_.kinks)
    if (k >= lo && k <= hi) out.push_back(k);
  for (double k : spec_.gain.locate_kinks(t, lo, hi, n)) out.push_back(k);
  for (double k : h_.locate_kinks(t, lo, hi, n)) out.push_back(k);
  std::sort(out.begin(), out.end());
  const double merge = 1e-9 * std::max(1.0, hi - lo);
  std::vector<double> uniq;
  for (double k : out)
    if (uniq.empty() || k - uniq.back() > merge) uniq.push_back(k);
  return uniq;
}

double GainModel::eval_H(double t, double x) const {
  if (near_kink(t, x, x)) throw KinkAtPoint(x);
  return h_.evaluate({t, x});
}

double GainModel::eval_Hx(double t, double x) const {
  const Expr& hx = Hx();
  if (near_kink(t, x, x)) throw KinkAtPoint(x);
  return hx.evaluate({t, x});
}

GainAudit audit_gain(const GainSpec& spec, double horizon, double lo, double hi, int nodes) {
  GainAudit a;
  auto fail = [&](const std::string& s) {
    a.pass = false;
    if (a.failures.size() < 8) a.failures.push_back(s);
  };
  const int tn = 8;
  for (int i = 0; i <= tn; ++i) {
    const double t = horizon * i / tn;
    for (int k = 0; k <= nodes; ++k) {
      const double x = lo + (hi - lo) * k / nodes;
      try {
        spec.gain.evaluate({t, x});
        if (spec.cost.evaluate({t, x}) < 0.0) fail("cost negative at x=" + std::to_string(x));
        if (i == 0) {
          if (spec.discount.evaluate({t, x}) < 0.0) fail("discount negative at x=" + std::to_string(x));
          if (spec.terminal) spec.terminal->evaluate({horizon, x});
        }
      } catch (const DomainError& e) {
        fail(std::string("DomainError: ") + e.what());
      }
    }
  }
  return a;
}

}  // namespace stopline
