#include "stopline/pde.hpp"

#include "stopline/errors.hpp"
#include "stopline/io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stopline {

namespace {

struct Operator {
  std::vector<double> lo, di, up;  // L' = L - r at interior nodes
};

Operator build_operator(const ProblemSpec& p, const Grid& g) {
  const int M = g.M();
  Operator op{std::vector<double>(M + 1, 0.0), std::vector<double>(M + 1, 0.0), std::vector<double>(M + 1, 0.0)};
  for (int j = 1; j < M; ++j) {
    const double x = g.x[j];
    const double hm = g.x[j] - g.x[j - 1];
    const double hp = g.x[j + 1] - g.x[j];
    const double mu = p.diffusion.drift(x);
    const double s2 = p.diffusion.vol(x) * p.diffusion.vol(x);
    const double r = p.gain.discount.evaluate({0.0, x});
    double a = (s2 - mu * hp) / (hm * (hm + hp));
    double c = (s2 + mu * hm) / (hp * (hm + hp));
    if (a < 0.0 || c < 0.0) {
      a = s2 / (hm * (hm + hp)) + std::max(-mu, 0.0) / hm;
      c = s2 / (hp * (hm + hp)) + std::max(mu, 0.0) / hp;
    }
    op.lo[j] = a;
    op.up[j] = c;
    op.di[j] = -(a + c) - r;
  }
  return op;
}

SideBc resolve(SideBc bc, bool stopping_side, bool constrained) {
  if (bc != SideBc::Auto) return bc;
  return constrained && stopping_side ? SideBc::Dirichlet : SideBc::Linear;
}

ValueSurface run(const ProblemSpec& p, const Grid& g, const Scheme& scheme, bool constrained) {
  if (!(scheme.theta >= 0.5 && scheme.theta <= 1.0))
    throw make_error("SchemaError", "theta must lie in [0.5, 1]");
  if (scheme.rannacher_steps < 0) throw make_error("SchemaError", "rannacher_steps must be >= 0");
  if (!(scheme.psor.omega > 0.0 && scheme.psor.omega < 2.0))
    throw make_error("SchemaError", "omega must lie in (0, 2)");
  if (scheme.psor.max_iter < 1) throw make_error("SchemaError", "max_iter must be >= 1");

  const int M = g.M();
  const int N = g.N();
  const double dt = g.dt();
  const double T = g.horizon();

  ValueSurface vs;
  vs.grid = g;
  vs.constrained = constrained;
  vs.tol_psor = scheme.psor.tol;
  vs.tol_indicator = 10.0 * scheme.psor.tol;
  const std::size_t total = static_cast<std::size_t>(N + 1) * (M + 1);
  vs.V.assign(total, 0.0);
  vs.G.assign(total, 0.0);
  vs.residual.assign(total, 0.0);
  vs.pde_residual.assign(total, 0.0);
  vs.indicator.assign(total, constrained ? Phase::Stop : Phase::Continue);

  std::vector<std::vector<double>> cost(N + 1, std::vector<double>(M + 1, 0.0));
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= M; ++j) {
      vs.G[vs.at(i, j)] = i == N ? p.gain.terminal_value(T, g.x[j]) : p.gain.gain.evaluate({g.t[i], g.x[j]});
      if (!p.gain.cost.is_zero()) cost[i][j] = p.gain.cost.evaluate({g.t[i], g.x[j]});
    }
  }
  for (int j = 0; j <= M; ++j) vs.V[vs.at(N, j)] = vs.G[vs.at(N, j)];

  const Operator L = build_operator(p, g);
  const bool below = p.orientation == Orientation::StopBelow;
  const SideBc bc_lo = resolve(p.bc_lo, below, constrained);
  const SideBc bc_hi = resolve(p.bc_hi, !below, constrained);

  std::vector<double> Al(M + 1), Ad(M + 1), Au(M + 1), b(M + 1), V(M + 1);
  std::vector<double> cp(M + 1), dp(M + 1);

  for (int i = N - 1; i >= 0; --i) {
    const int k = N - 1 - i;
    const double th = k < scheme.rannacher_steps ? 1.0 : scheme.theta;
    const double* V1 = &vs.V[vs.at(i + 1, 0)];
    const double* Gi = &vs.G[vs.at(i, 0)];
    for (int j = 1; j < M; ++j) {
      const double LV1 = L.lo[j] * V1[j - 1] + L.di[j] * V1[j] + L.up[j] * V1[j + 1];
      b[j] = V1[j] + (1.0 - th) * dt * LV1 - dt * (th * cost[i][j] + (1.0 - th) * cost[i + 1][j]);
      Al[j] = -th * dt * L.lo[j];
      Ad[j] = 1.0 - th * dt * L.di[j];
      Au[j] = -th * dt * L.up[j];
    }

    if (constrained) {
      for (int j = 0; j <= M; ++j) V[j] = std::max(V1[j], Gi[j]);
      auto edges = [&] {
        V[0] = bc_lo == SideBc::Dirichlet ? Gi[0] : std::max(2.0 * V[1] - V[2], Gi[0]);
        V[M] = bc_hi == SideBc::Dirichlet ? Gi[M] : std::max(2.0 * V[M - 1] - V[M - 2], Gi[M]);
      };
      edges();
      const double omega = scheme.psor.omega;
      int iter = 0;
      double err = 0.0;
      int worst = 0;
      for (;;) {
        for (int j = 1; j < M; ++j) {
          const double y = (b[j] - Al[j] * V[j - 1] - Au[j] * V[j + 1]) / Ad[j];
          V[j] = std::max(Gi[j], V[j] + omega * (y - V[j]));
        }
        edges();
        ++iter;
        err = 0.0;
        for (int j = 1; j < M; ++j) {
          const double r = (Al[j] * V[j - 1] + Ad[j] * V[j] + Au[j] * V[j + 1] - b[j]) / dt;
          const double e = std::fabs(std::min(r, V[j] - Gi[j]));
          if (!(e <= err)) {
            err = e;
            worst = j;
          }
        }
        if (err <= scheme.psor.tol) break;
        if (iter >= scheme.psor.max_iter || !std::isfinite(err))
          throw make_error("PsorDiverged", "PSOR did not converge at step " + std::to_string(k) + " (t=" +
                                               fmt17(g.t[i]) + ") after " + std::to_string(iter) +
                                               " iterations; worst node j=" + std::to_string(worst) +
                                               " x=" + fmt17(g.x[worst]) + " residual=" + fmt17(err));
      }
      vs.psor_iterations += iter;
      vs.psor_max_iterations = std::max(vs.psor_max_iterations, iter);
    } else {
      // Thomas algorithm with the edge rows eliminated.
      std::vector<double> l(Al), d(Ad), u(Au), rhs(b);
      double v0 = 0.0;
      double vM = 0.0;
      if (bc_lo == SideBc::Dirichlet) {
        v0 = Gi[0];
        rhs[1] -= l[1] * v0;
      } else {
        d[1] += 2.0 * l[1];
        u[1] -= l[1];
      }
      l[1] = 0.0;
      if (bc_hi == SideBc::Dirichlet) {
        vM = Gi[M];
        rhs[M - 1] -= u[M - 1] * vM;
      } else {
        d[M - 1] += 2.0 * u[M - 1];
        l[M - 1] -= u[M - 1];
      }
      u[M - 1] = 0.0;
      cp[1] = u[1] / d[1];
      dp[1] = rhs[1] / d[1];
      for (int j = 2; j < M; ++j) {
        const double den = d[j] - l[j] * cp[j - 1];
        cp[j] = u[j] / den;
        dp[j] = (rhs[j] - l[j] * dp[j - 1]) / den;
      }
      V[M - 1] = dp[M - 1];
      for (int j = M - 2; j >= 1; --j) V[j] = dp[j] - cp[j] * V[j + 1];
      V[0] = bc_lo == SideBc::Dirichlet ? v0 : 2.0 * V[1] - V[2];
      V[M] = bc_hi == SideBc::Dirichlet ? vM : 2.0 * V[M - 1] - V[M - 2];
      for (int j = 0; j <= M; ++j)
        if (!std::isfinite(V[j]))
          throw make_error("PsorDiverged", "non-finite value at step " + std::to_string(k) + " node j=" +
                                               std::to_string(j));
    }

    for (int j = 0; j <= M; ++j) {
      const std::size_t n = vs.at(i, j);
      vs.V[n] = V[j];
      double pr = 0.0;
      if (j > 0 && j < M) pr = (b[j] - Al[j] * V[j - 1] - Ad[j] * V[j] - Au[j] * V[j + 1]) / dt;
      vs.pde_residual[n] = pr;
      if (constrained) {
        const bool stop = V[j] - Gi[j] <= vs.tol_indicator;
        vs.indicator[n] = stop ? Phase::Stop : Phase::Continue;
        vs.residual[n] = stop ? V[j] - Gi[j] : pr;
      } else {
        vs.residual[n] = pr;
      }
    }
  }
  return vs;
}

}  // namespace

ValueSurface solve_vi(const ProblemSpec& p, const Grid& g, const Scheme& scheme) { return run(p, g, scheme, true); }

ValueSurface solve_unconstrained(const ProblemSpec& p, const Grid& g, const Scheme& scheme) {
  return run(p, g, scheme, false);
}

SurfaceAudit audit_surface(const ValueSurface& vs) {
  SurfaceAudit a;
  const int M = vs.grid.M();
  const int N = vs.grid.N();
  a.min_v_minus_g = vs.v(0, 0) - vs.g(0, 0);
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= M; ++j) {
      const double gap = vs.v(i, j) - vs.g(i, j);
      a.min_v_minus_g = std::min(a.min_v_minus_g, gap);
      if (i < N && j > 0 && j < M)
        a.max_complementarity = std::max(a.max_complementarity, std::fabs(std::min(-vs.pde_res(i, j), gap)));
    }
    if (i == N)
      for (int j = 0; j <= M; ++j) a.max_terminal_error = std::max(a.max_terminal_error, std::fabs(vs.v(N, j) - vs.g(N, j)));
  }
  return a;
}

double interpolate(const ValueSurface& vs, double t, double x) {
  const Grid& g = vs.grid;
  const int M = g.M();
  const int N = g.N();
  t = std::clamp(t, g.t.front(), g.t.back());
  x = std::clamp(x, g.x.front(), g.x.back());
  int i = std::min(static_cast<int>(std::floor(t / g.dt())), N - 1);
  i = std::max(i, 0);
  int j = static_cast<int>(std::upper_bound(g.x.begin(), g.x.end(), x) - g.x.begin()) - 1;
  j = std::clamp(j, 0, M - 1);
  const double wt = (t - g.t[i]) / (g.t[i + 1] - g.t[i]);
  const double wx = (x - g.x[j]) / (g.x[j + 1] - g.x[j]);
  const double lo = (1.0 - wx) * vs.v(i, j) + wx * vs.v(i, j + 1);
  const double hi = (1.0 - wx) * vs.v(i + 1, j) + wx * vs.v(i + 1, j + 1);
  return (1.0 - wt) * lo + wt * hi;
}

std::string value_csv(const ValueSurface& vs) {
  std::string out = "t,x,V,G,indicator,residual\n";
  const int M = vs.grid.M();
  const int N = vs.grid.N();
  out.reserve(static_cast<std::size_t>(N + 1) * (M + 1) * 96);
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= M; ++j) {
      out += fmt17(vs.grid.t[i]);
      out += ',';
      out += fmt17(vs.grid.x[j]);
      out += ',';
      out += fmt17(vs.v(i, j));
      out += ',';
      out += fmt17(vs.g(i, j));
      out += ',';
      out += vs.phase(i, j) == Phase::Stop ? "STOP" : "CONTINUE";
      out += ',';
      out += fmt17(vs.res(i, j));
      out += '\n';
    }
  }
  return out;
}

}  // namespace stopline
