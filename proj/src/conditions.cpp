#include "stopline/conditions.hpp"

#include "stopline/errors.hpp"
#include "stopline/io.hpp"
#include "stopline/montecarlo.hpp"
#include "stopline/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stopline {

namespace {

double bump_integral() {
  static const double value = simpson(
      [](double s) { return std::fabs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }, -1.0, 1.0, 200000);
  return value;
}

double slope3(const Grid& g, const std::vector<double>& row, int j) {
  const double x0 = g.x[j - 1], x1 = g.x[j], x2 = g.x[j + 1];
  const double d01 = (row[j] - row[j - 1]) / (x1 - x0);
  const double d12 = (row[j + 1] - row[j]) / (x2 - x1);
  return d01 + (d12 - d01) / (x2 - x0) * (x1 - x0);
}

struct CollarNode {
  int i;
  int j;
  bool stop;  // the boundary node itself
};

std::vector<CollarNode> collar(const GainModel& gm, const ValueSurface& vs, const Boundary& b, double eps,
                               SliceRange range) {
  const Grid& g = vs.grid;
  const int M = g.M();
  const int last = range.i2 < 0 ? b.size() - 1 : std::min(range.i2, b.size() - 1);
  const bool below = b.orientation == Orientation::StopBelow;
  const int dir = below ? 1 : -1;
  const double dx = g.mean_dx();
  const double pad = 2.0 * dx * (1.0 + 1e-9);
  std::vector<CollarNode> out;
  for (int i = std::max(0, range.i1); i <= last; ++i) {
    if (!b.usable(i)) continue;
    const double t = b.t[i];
    const double bi = b.b[i];
    const std::vector<double> kinks = gm.kinks(t, b.window.first, b.window.second, M);
    const double limit = bi + dir * eps;
    const int s = b.stop_node[i];
    for (int j = s; j >= 0 && j <= M && dir * (g.x[j] - limit) <= 1e-12; j += dir) {
      const double x = g.x[j];
      const bool near = std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::fabs(x - k) <= pad; });
      if (near) continue;
      out.push_back({i, j, j == s});
    }
  }
  return out;
}

double safe_H(const GainModel& gm, double t, double x, bool* ok) {
  try {
    *ok = true;
    return gm.eval_H(t, x);
  } catch (const KinkAtPoint&) {
    *ok = false;
    return 0.0;
  }
}

struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

Fit loglog(const std::vector<CurvePoint>& pts) {
  std::vector<double> lx, ly;
  for (const auto& p : pts) {
    if (p.value > 0.0) {
      lx.push_back(std::log(p.at));
      ly.push_back(std::log(p.value));
    }
  }
  Fit f;
  const double n = static_cast<double>(lx.size());
  if (lx.size() < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace

TestFunction::TestFunction(double center, double radius) : c_(center), rho_(radius) {
  if (!(radius > 0.0) || !std::isfinite(center)) throw make_error("SchemaError", "test function needs radius > 0");
  kappa_ = 1.0 / (radius * bump_integral());
  const std::string s = "((x - " + fmt17(c_) + ") / " + fmt17(rho_) + ")";
  expr_ = Expr::parse("piecewise(" + s + "^2 < 0.999999999999, " + fmt17(kappa_) +
                      " * exp(-1 / (1 - " + s + "^2)), 0)");
}

C1Result check_C1(const GainModel& gm, const ValueSurface& vs, const Boundary& b, double eps_collar, double ell_min,
                  SliceRange range) {
  C1Result r;
  r.eps_collar = eps_collar;
  r.ell_min = ell_min;
  for (double f : {0.5, 1.0, 2.0}) {
    const auto nodes = collar(gm, vs, b, f * eps_collar, range);
    double ell = std::numeric_limits<double>::infinity();
    double wt = 0.0, wx = 0.0;
    long count = 0;
    std::vector<int> slices;
    for (const auto& n : nodes) {
      bool ok = false;
      const double h = safe_H(gm, vs.grid.t[n.i], vs.grid.x[n.j], &ok);
      if (!ok) continue;
      ++count;
      if (slices.empty() || slices.back() != n.i) slices.push_back(n.i);
      if (-h < ell) {
        ell = -h;
        wt = vs.grid.t[n.i];
        wx = vs.grid.x[n.j];
      }
    }
    if (f == 1.0) {
      if (count == 0) throw make_error("EmptyCollar", "no grid node in the C.1 collar");
      r.ell_eps = ell;
      r.nodes = count;
      r.slices = static_cast<int>(slices.size());
      r.worst_t = wt;
      r.worst_x = wx;
    }
    r.sensitivity.push_back({f * eps_collar, count ? ell : std::numeric_limits<double>::quiet_NaN()});
  }
  r.pass = r.ell_eps >= ell_min;
  return r;
}

C2Result check_C2(const GainModel& gm, const ValueSurface& vs, const Boundary& b, double eps_collar, double ell_min,
                  double vx_tol, SliceRange range) {
  C2Result r;
  r.eps_collar = eps_collar;
  const bool below = b.orientation == Orientation::StopBelow;
  const auto nodes = collar(gm, vs, b, eps_collar, range);
  const Grid& g = vs.grid;
  const int M = g.M();
  double hx_ext = below ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  double vg_ext = 0.0;
  bool have_vg = false;
  std::vector<double> vrow(M + 1), grow(M + 1);
  int cached = -1;
  for (const auto& n : nodes) {
    const double t = g.t[n.i];
    const double x = g.x[n.j];
    double hx;
    try {
      hx = gm.eval_Hx(t, x);
    } catch (const KinkAtPoint&) {
      continue;
    }
    ++r.nodes;
    hx_ext = below ? std::min(hx_ext, hx) : std::max(hx_ext, hx);
    if (n.stop || n.j <= 0 || n.j >= M) continue;
    if (cached != n.i) {
      for (int j = 0; j <= M; ++j) {
        vrow[j] = vs.v(n.i, j);
        grow[j] = vs.g(n.i, j);
      }
      cached = n.i;
    }
    const double d = slope3(g, vrow, n.j) - slope3(g, grow, n.j);
    vg_ext = !have_vg ? d : (below ? std::min(vg_ext, d) : std::max(vg_ext, d));
    have_vg = true;
  }
  if (r.nodes == 0) throw make_error("EmptyCollar", "no grid node in the C.2 collar");
  r.ell_prime_eps = hx_ext;
  r.min_vxgx = have_vg ? vg_ext : 0.0;
  r.pass = below ? (hx_ext >= ell_min && r.min_vxgx >= -vx_tol) : (hx_ext <= -ell_min && r.min_vxgx <= vx_tol);
  return r;
}

HolderEstimate estimate_modulus_C3(const ValueSurface& vs, int sample_count, std::pair<double, double> window) {
  const Grid& g = vs.grid;
  const int M = g.M();
  const int N = g.N();
  int jlo = 0;
  while (jlo < M && g.x[jlo] < window.first) ++jlo;
  int jhi = M;
  while (jhi > 0 && g.x[jhi] > window.second) --jhi;
  const int nx = jhi - jlo + 1;
  const double total = static_cast<double>(N + 1) * nx;
  const int stride = std::max(1, static_cast<int>(std::floor(std::sqrt(total / std::max(1, sample_count)))));
  const int lags[] = {1, 2, 4, 8, 16};
  HolderEstimate h;
  double vmax = 0.0;
  for (double v : vs.V) vmax = std::max(vmax, std::fabs(v));
  const double dx = g.mean_dx();
  const double dt = g.dt();
  struct Sample {
    double t, x, lag, inc;
  };
  std::vector<Sample> sx, st;
  for (int lag : lags) {
    if (jhi - jlo <= lag) continue;
    double sup = 0.0;
    for (int i = 0; i <= N; i += stride)
      for (int j = jlo; j + lag <= jhi; j += stride) {
        const double inc = std::fabs(vs.v(i, j + lag) - vs.v(i, j));
        sup = std::max(sup, inc);
        sx.push_back({g.t[i], g.x[j], lag * dx, inc});
      }
    h.lag_x.push_back({lag * dx, sup});
  }
  for (int lag : lags) {
    if (N <= lag) continue;
    double sup = 0.0;
    for (int i = 0; i + lag <= N; i += stride)
      for (int j = jlo; j <= jhi; j += stride) {
        const double inc = std::fabs(vs.v(i + lag, j) - vs.v(i, j));
        sup = std::max(sup, inc);
        st.push_back({g.t[i], g.x[j], lag * dt, inc});
      }
    h.lag_t.push_back({lag * dt, sup});
  }
  if (h.lag_x.size() < 3 || h.lag_t.size() < 3)
    throw make_error("InsufficientSamples", "C.3 needs at least three lags in x and in t");
  h.samples = static_cast<long>(sx.size() + st.size());
  const double floor = 1e-12 * (1.0 + vmax);
  const Fit fx = loglog(h.lag_x);
  h.exp_x = fx.slope;
  h.r2_x = fx.r2;
  double tmax = 0.0;
  for (const auto& p : h.lag_t) tmax = std::max(tmax, p.value);
  h.t_flat = tmax <= floor;
  if (h.t_flat) {
    h.exp_t = std::numeric_limits<double>::infinity();
    h.r2_t = 1.0;
    h.alpha = h.exp_x;
  } else {
    const Fit ft = loglog(h.lag_t);
    h.exp_t = ft.slope;
    h.r2_t = ft.r2;
    h.alpha = std::min(h.exp_x, 2.0 * h.exp_t);
  }
  h.alpha = std::min(h.alpha, 1.0);
  const int bins = 20;
  const double xa = g.x[jlo], xb = g.x[jhi];
  std::vector<double> th1(bins, 0.0), th2(bins, 0.0);
  if (h.alpha > 0.0) {
    for (const auto& s : st) {
      const int k = std::clamp(static_cast<int>((s.x - xa) / (xb - xa) * bins), 0, bins - 1);
      th1[k] = std::max(th1[k], s.inc / std::pow(s.lag, h.alpha / 2.0));
    }
    for (const auto& s : sx) {
      const int k = std::clamp(static_cast<int>(s.t / g.horizon() * bins), 0, bins - 1);
      th2[k] = std::max(th2[k], s.inc / std::pow(s.lag, h.alpha));
    }
  }
  for (int k = 0; k < bins; ++k) {
    h.theta1.push_back({std::fabs(xa + (k + 0.5) * (xb - xa) / bins), th1[k]});
    h.theta2.push_back({(k + 0.5) * g.horizon() / bins, th2[k]});
  }
  h.pass = h.alpha > 0.0 && h.r2_x >= 0.9 && h.r2_t >= 0.9;
  return h;
}

C4Result check_C4(const ProblemSpec& p, double delta, double R, const std::vector<double>& t_samples, int mc_n,
                  std::uint64_t seed, double dt_mc, int x_nodes, int bootstrap) {
  if (!(delta > 1.0)) throw make_error("SchemaError", "delta must exceed 1");
  if (!(R > 0.0)) throw make_error("SchemaError", "R must be positive");
  if (t_samples.empty()) throw make_error("SchemaError", "C.4 needs at least one sample time");
  if (x_nodes < 2) throw make_error("SchemaError", "C.4 needs at least two x nodes");
  C4Result r;
  r.delta = delta;
  r.R = R;
  r.x_lo = std::max(-R, p.x_lo);
  r.x_hi = std::min(R, p.x_hi);
  r.x_nodes = x_nodes;
  r.paths = mc_n;
  r.dt_mc = dt_mc;
  r.seed = seed;
  r.bootstrap = bootstrap;
  if (!(r.x_lo < r.x_hi)) throw make_error("BadDomain", "[-R, R] does not meet the truncated domain");
  std::vector<double> xs(x_nodes);
  for (int q = 0; q < x_nodes; ++q) xs[q] = r.x_lo + (r.x_hi - r.x_lo) * q / (x_nodes - 1);
  if (x_nodes > 1) xs.back() = r.x_hi;
  int best = -1;
  std::vector<std::vector<double>> best_samples;
  for (std::size_t ti = 0; ti < t_samples.size(); ++ti) {
    const double t = t_samples[ti];
    if (!(t >= 0.0 && t < p.horizon)) throw make_error("SchemaError", "C.4 sample times must lie in [0, T)");
    std::vector<std::vector<double>> samples(x_nodes);
    std::vector<double> ys(x_nodes);
    for (int q = 0; q < x_nodes; ++q) {
      const MCEstimate e = estimate_kappa(p, delta, t, xs[q], mc_n, path_seed(seed, ti * x_nodes + q), dt_mc, &samples[q]);
      ys[q] = std::pow(e.mean, 1.0 / delta);
    }
    const double integral = trapezoid(xs, ys);
    if (!std::isfinite(integral)) throw make_error("SimulationOverflow", "kappa integral is not finite");
    r.per_t.push_back({t, integral});
    if (best < 0 || integral > r.value) {
      best = static_cast<int>(ti);
      r.value = integral;
      r.t_at_sup = t;
      best_samples = std::move(samples);
    }
  }
  std::mt19937_64 rng(path_seed(seed, 0xB0075742ULL));
  std::uniform_int_distribution<int> pick(0, mc_n - 1);
  std::vector<double> boot(bootstrap);
  std::vector<double> ys(x_nodes);
  for (int k = 0; k < bootstrap; ++k) {
    for (int q = 0; q < x_nodes; ++q) {
      double s = 0.0;
      for (int m = 0; m < mc_n; ++m) s += best_samples[q][pick(rng)];
      ys[q] = std::pow(s / mc_n, 1.0 / delta);
    }
    boot[k] = trapezoid(xs, ys);
  }
  std::sort(boot.begin(), boot.end());
  if (bootstrap > 0) {
    r.ci_lo = boot[static_cast<std::size_t>(std::floor(0.025 * (bootstrap - 1)))];
    r.ci_hi = boot[static_cast<std::size_t>(std::ceil(0.975 * (bootstrap - 1)))];
  } else {
    r.ci_lo = r.ci_hi = r.value;
  }
  r.pass = std::isfinite(r.value) && std::isfinite(r.ci_lo) && std::isfinite(r.ci_hi) &&
           (r.ci_hi - r.ci_lo) < 0.1 * std::fabs(r.value);
  return r;
}

double gamma_functional(const Diffusion& d, const Expr& theta, const TestFunction& psi, int n_quad) {
  const Expr adj = d.adjoint(psi.expr());
  return simpson(
      [&](double y) {
        const double a = adj.evaluate({0.0, y});
        return a >= 0.0 ? theta.evaluate({0.0, y}) * a : 0.0;
      },
      psi.lo(), psi.hi(), n_quad);
}

FPsiSeries F_psi_series(const GainModel& gm, const ValueSurface& vs, const TestFunction& psi, int i_lo, int i_hi,
                        double x_lo, double x_hi) {
  const Grid& g = vs.grid;
  const int M = g.M();
  const int N = g.N();
  if (!(0 <= i_lo && i_lo + 1 < i_hi && i_hi <= N)) throw make_error("SchemaError", "rectangle needs i_lo + 1 < i_hi <= N");
  if (psi.lo() < x_lo || psi.hi() > x_hi) throw make_error("SchemaError", "test function support leaves the rectangle");
  int jlo = 0;
  while (jlo < M && g.x[jlo] < x_lo) ++jlo;
  int jhi = M;
  while (jhi > 0 && g.x[jhi] > x_hi) --jhi;
  if (jlo < 1 || jhi > M - 1 || jhi - jlo < 2) throw make_error("SchemaError", "rectangle must lie inside the grid interior");
  for (int i = i_lo; i <= i_hi; ++i)
    for (int j = jlo; j <= jhi; ++j)
      if (vs.phase(i, j) != Phase::Continue)
        throw make_error("RectOutsideContinuation", "node (t=" + fmt17(g.t[i]) + ", x=" + fmt17(g.x[j]) +
                                                        ") of the rectangle is in the stopping set");

  const Diffusion& d = gm.diffusion();
  const Expr& sig = d.sigma();
  const Expr& mu = d.mu();
  const Expr& psi_e = psi.expr();
  const Expr r = gm.spec().discount;
  const Expr half = Expr::constant(0.5);
  const Expr adj = (half * sig * sig * psi_e).differentiate(Var::X).differentiate(Var::X) -
                   ((sig * d.sigma_x() + mu) * psi_e).differentiate(Var::X) + (d.mu_x() - r) * psi_e;
  const Expr dadj = adj.differentiate(Var::X);
  const Expr rx = r.differentiate(Var::X);
  const Expr& hx = gm.Hx();

  // The adjoint route integrates against high derivatives of psi, so it uses
  // a fine Simpson rule on the support with u interpolated linearly.
  const int nq = 4000;
  const double qa = psi.lo(), qb = psi.hi();
  std::vector<double> qx(nq + 1), qw(nq + 1), qd(nq + 1), qp(nq + 1);
  std::vector<int> qj(nq + 1);
  std::vector<double> qs(nq + 1);
  for (int k = 0; k <= nq; ++k) {
    const double x = qa + (qb - qa) * k / nq;
    qx[k] = x;
    qw[k] = (qb - qa) / nq / 3.0 * (k == 0 || k == nq ? 1.0 : (k % 2 ? 4.0 : 2.0));
    qp[k] = psi_e.evaluate({0.0, x});
    qd[k] = dadj.evaluate({0.0, x}) + rx.evaluate({0.0, x}) * qp[k];
    const int j = static_cast<int>(std::upper_bound(g.x.begin(), g.x.end(), x) - g.x.begin()) - 1;
    qj[k] = std::clamp(j, 0, M - 1);
    qs[k] = (x - g.x[qj[k]]) / (g.x[qj[k] + 1] - g.x[qj[k]]);
  }
  std::vector<double> xs(g.x.begin() + jlo, g.x.begin() + jhi + 1);
  std::vector<double> ps(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) ps[k] = psi_e.evaluate({0.0, xs[k]});
  auto ubar = [&](int i) {
    std::vector<double> u(M + 1), out(xs.size());
    for (int j = 0; j <= M; ++j) u[j] = vs.v(i, j) - vs.g(i, j);
    for (std::size_t k = 0; k < xs.size(); ++k) out[k] = slope3(g, u, jlo + static_cast<int>(k));
    return out;
  };
  FPsiSeries out;
  std::vector<double> f(xs.size());
  for (int i = i_lo + 1; i < i_hi; ++i) {
    const double t = g.t[i];
    double adjoint = 0.0;
    for (int k = 0; k <= nq; ++k) {
      if (qp[k] == 0.0 && qd[k] == 0.0) continue;
      const int j = qj[k];
      const double u0 = vs.v(i, j) - vs.g(i, j);
      const double u1 = vs.v(i, j + 1) - vs.g(i, j + 1);
      const double u = u0 + qs[k] * (u1 - u0);
      const double h = qp[k] != 0.0 ? hx.evaluate({t, qx[k]}) : 0.0;
      adjoint += qw[k] * (u * qd[k] - h * qp[k]);
    }
    const auto up = ubar(i + 1);
    const auto dn = ubar(i - 1);
    for (std::size_t k = 0; k < xs.size(); ++k) f[k] = (up[k] - dn[k]) / (g.t[i + 1] - g.t[i - 1]) * ps[k];
    out.t.push_back(t);
    out.adjoint.push_back(adjoint);
    out.direct.push_back(trapezoid(xs, f));
  }
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::T31_OK: return "T31_OK";
    case Verdict::T32_OK: return "T32_OK";
    case Verdict::T33_OK: return "T33_OK";
    case Verdict::PROP_OK: return "PROP_OK";
    case Verdict::INCONCLUSIVE: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

std::vector<SegmentVerdict> continuity_verdict(const std::vector<SegmentChecks>& checks, bool time_independent) {
  std::vector<SegmentVerdict> out;
  for (const auto& c : checks) {
    SegmentVerdict v;
    v.segment = c.segment;
    const bool up = c.segment.direction != Direction::Decreasing;
    const bool down = c.segment.direction != Direction::Increasing;
    if (time_independent && c.c1) {
      v.verdict = Verdict::PROP_OK;
    } else if (up && c.c1 && c.c4) {
      v.verdict = Verdict::T32_OK;
    } else if (up && c.c1 && c.c3) {
      v.verdict = Verdict::T31_OK;
    } else if (down && c.c2) {
      v.verdict = Verdict::T33_OK;
    } else {
      v.verdict = Verdict::INCONCLUSIVE;
      if (up && !c.c1) v.reason = "C.1";
      else if (up) v.reason = "C.3/C.4";
      else v.reason = "C.2";
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace stopline
