#include "stopline/montecarlo.hpp"

#include "parallel.hpp"
#include "stopline/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stopline {

namespace {

int step_count(double horizon, double dt_mc) {
  if (!(dt_mc > 0.0)) throw make_error("SchemaError", "dt_mc must be positive");
  if (!(horizon >= 0.0)) throw make_error("SchemaError", "horizon must be non-negative");
  return std::max(1, static_cast<int>(std::ceil(horizon / dt_mc - 1e-9)));
}

struct Stepper {
  const Diffusion& d;
  double dt;
  double sq;
  double step(double x, double z, long path, int k) const {
    double mu, sig;
    try {
      mu = d.drift(x);
      sig = d.vol(x);
    } catch (const Error& e) {
      throw make_error("CoefficientBlowup", "coefficient evaluation failed on path " + std::to_string(path) +
                                                " at step " + std::to_string(k) + ": " + e.what());
    }
    const double next = x + mu * dt + sig * sq * z;
    if (!std::isfinite(next))
      throw make_error("CoefficientBlowup", "non-finite state on path " + std::to_string(path) + " at step " +
                                                std::to_string(k));
    return next;
  }
  double vol(double x) const { return d.vol(x); }
};

// Boundary value at time t by linear interpolation between slices.
double boundary_at(const Boundary& b, double t) {
  const int n = b.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  if (t <= b.t.front()) return b.b.front();
  if (t >= b.t.back()) return b.b.back();
  int i = static_cast<int>(std::upper_bound(b.t.begin(), b.t.end(), t) - b.t.begin()) - 1;
  i = std::clamp(i, 0, n - 2);
  const double b0 = b.b[i];
  const double b1 = b.b[i + 1];
  if (!std::isfinite(b0) || !std::isfinite(b1)) return t - b.t[i] < b.t[i + 1] - t ? b0 : b1;
  const double w = (t - b.t[i]) / (b.t[i + 1] - b.t[i]);
  return (1.0 - w) * b0 + w * b1;
}

double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly, double* intercept) {
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (intercept) *intercept = (sy - slope * sx) / n;
  return slope;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MCEstimate summarize(const std::vector<double>& samples, std::uint64_t seed) {
  MCEstimate e;
  e.n = static_cast<long>(samples.size());
  e.seed = seed;
  if (samples.empty()) return e;
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= e.n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  e.mean = mean;
  e.se = e.n > 1 ? std::sqrt(ss / (e.n - 1) / e.n) : 0.0;
  return e;
}

PathBatch simulate_paths(const Diffusion& d, double x0, double horizon, double dt_mc, int n, std::uint64_t seed,
                         std::optional<std::pair<double, double>> domain) {
  if (n < 1) throw make_error("SchemaError", "path count must be positive");
  PathBatch out;
  out.n = n;
  out.steps = step_count(horizon, dt_mc);
  out.dt = horizon / out.steps;
  out.seed = seed;
  out.X.assign(static_cast<std::size_t>(n) * (out.steps + 1), 0.0);
  std::vector<char> left(n, 0);
  const Stepper st{d, out.dt, std::sqrt(out.dt)};
  detail::parallel_for(n, [&](long p) {
    std::mt19937_64 rng(path_seed(seed, p));
    std::normal_distribution<double> z;
    double* row = &out.X[static_cast<std::size_t>(p) * (out.steps + 1)];
    row[0] = x0;
    double x = x0;
    for (int k = 0; k < out.steps; ++k) {
      x = st.step(x, z(rng), p, k);
      row[k + 1] = x;
      if (domain && (x < domain->first || x > domain->second)) left[p] = 1;
    }
  });
  out.left_domain.assign(left.begin(), left.end());
  return out;
}

MCEstimate estimate_value_with_boundary(const ProblemSpec& p, const Boundary& b, double t0, double x0, int n,
                                        std::uint64_t seed, double dt_mc) {
  if (b.orientation != p.orientation)
    throw make_error("OrientationMismatch", std::string("boundary orientation ") + to_string(b.orientation) +
                                                " does not match problem orientation " + to_string(p.orientation));
  if (n < 1) throw make_error("SchemaError", "path count must be positive");
  const double T = p.horizon;
  const int steps = step_count(T - t0, dt_mc);
  const double dt = (T - t0) / steps;
  const bool below = p.orientation == Orientation::StopBelow;
  std::vector<double> bk(steps + 1);
  for (int k = 0; k <= steps; ++k) bk[k] = boundary_at(b, t0 + k * dt);
  const bool discount = !p.gain.discount.is_zero();
  const bool cost = !p.gain.cost.is_zero();
  const Stepper st{p.diffusion, dt, std::sqrt(dt)};
  std::vector<double> out(n);
  detail::parallel_for(n, [&](long path) {
    std::mt19937_64 rng(path_seed(seed, path));
    std::normal_distribution<double> z;
    double x = x0;
    double log_disc = 0.0;
    double paid = 0.0;
    for (int k = 0;; ++k) {
      const double t = t0 + k * dt;
      const bool stop_now = below ? x <= bk[k] : x >= bk[k];
      if (k == steps || stop_now) {
        const double g = k == steps ? p.gain.terminal_value(T, x) : p.gain.gain.evaluate({t, x});
        out[path] = std::exp(-log_disc) * g - paid;
        return;
      }
      const double r = discount ? p.gain.discount.evaluate({t, x}) : 0.0;
      if (cost) paid += std::exp(-log_disc) * p.gain.cost.evaluate({t, x}) * dt;
      log_disc += r * dt;
      x = st.step(x, z(rng), path, k);
    }
  });
  return summarize(out, seed);
}

namespace {

struct SupSample {
  bool exceeded = false;
  double max_dev = 0.0;
};

SupSample sup_path(const Stepper& st, double y, double eta, int steps, std::mt19937_64& rng, long path) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double up = y + eta;
  const double dn = y - eta;
  SupSample s;
  double x = y;
  for (int k = 0; k < steps; ++k) {
    const double sig = st.vol(x);
    const double next = st.step(x, z(rng), path, k);
    const double u = unif(rng);
    s.max_dev = std::max(s.max_dev, std::fabs(next - y));
    if (!s.exceeded) {
      if (next >= up || next <= dn) {
        s.exceeded = true;
      } else {
        const double v = sig * sig * st.dt;
        const double p_up = std::exp(-2.0 * (up - x) * (up - next) / v);
        const double p_dn = std::exp(-2.0 * (x - dn) * (next - dn) / v);
        if (u > (1.0 - p_up) * (1.0 - p_dn)) s.exceeded = true;
      }
    }
    x = next;
  }
  return s;
}

}  // namespace

MCEstimate estimate_sup_deviation(const Diffusion& d, double y, double h, double eta, int n, std::uint64_t seed,
                                  int steps) {
  if (!(h > 0.0) || !(eta > 0.0)) throw make_error("SchemaError", "h and eta must be positive");
  if (n < 1 || steps < 1) throw make_error("SchemaError", "path and step counts must be positive");
  const double dt = h / steps;
  const Stepper st{d, dt, std::sqrt(dt)};
  std::vector<char> hit(n, 0);
  detail::parallel_for(n, [&](long p) {
    std::mt19937_64 rng(path_seed(seed, p));
    hit[p] = sup_path(st, y, eta, steps, rng, p).exceeded ? 1 : 0;
  });
  long count = 0;
  for (char c : hit) count += c;
  MCEstimate e;
  e.n = n;
  e.seed = seed;
  e.mean = static_cast<double>(count) / n;
  e.se = std::sqrt(e.mean * (1.0 - e.mean) / n);
  return e;
}

SupDeviationStudy sup_deviation_study(const Diffusion& d, double y, double eta, const std::vector<double>& hs, int n,
                                      std::uint64_t seed, int steps, const std::vector<double>& betas) {
  if (hs.size() < 2) throw make_error("SchemaError", "sup-deviation study needs at least two horizons");
  SupDeviationStudy out;
  out.y = y;
  out.eta = eta;
  out.betas = betas;
  for (double h : hs) {
    if (!(h > 0.0)) throw make_error("SchemaError", "horizons must be positive");
    const double dt = h / steps;
    const Stepper st{d, dt, std::sqrt(dt)};
    std::vector<SupSample> samples(n);
    detail::parallel_for(n, [&](long p) {
      std::mt19937_64 rng(path_seed(seed, p));
      samples[p] = sup_path(st, y, eta, steps, rng, p);
    });
    SupDeviationRow row;
    row.h = h;
    long count = 0;
    for (const auto& s : samples) count += s.exceeded ? 1 : 0;
    row.probability.n = n;
    row.probability.seed = seed;
    row.probability.mean = static_cast<double>(count) / n;
    row.probability.se = std::sqrt(row.probability.mean * (1.0 - row.probability.mean) / n);
    for (double beta : betas) {
      std::vector<double> m(n);
      for (int p = 0; p < n; ++p) m[p] = std::pow(samples[p].max_dev, beta);
      row.moments.push_back(summarize(m, seed));
    }
    out.rows.push_back(row);
  }
  for (std::size_t q = 0; q < betas.size(); ++q) {
    std::vector<double> lx, ly;
    for (const auto& row : out.rows) {
      lx.push_back(std::log(row.h));
      ly.push_back(std::log(row.moments[q].mean));
    }
    out.slope.push_back(fit_slope(lx, ly, nullptr));
    // Smallest C with E sup|X - y|^beta <= C (1 + |y|^beta) h^(beta/2) on every row.
    double C = 0.0;
    for (const auto& row : out.rows)
      C = std::max(C, row.moments[q].mean / ((1.0 + std::pow(std::fabs(y), betas[q])) * std::pow(row.h, betas[q] / 2)));
    out.C.push_back(C);
    for (auto& row : out.rows) {
      const double bound = std::pow(eta, -betas[q]) * C * (1.0 + std::pow(std::fabs(y), betas[q])) *
                           std::pow(row.h, betas[q] / 2);
      row.bound.push_back(bound);
      if (row.probability.mean > bound + 3.0 * row.probability.se) out.bound_holds = false;
    }
  }
  return out;
}

MCEstimate estimate_kappa(const ProblemSpec& p, double delta, double t0, double x0, int n, std::uint64_t seed,
                          double dt_mc, std::vector<double>* samples) {
  if (!(delta > 1.0)) throw make_error("SchemaError", "delta must exceed 1");
  if (n < 1) throw make_error("SchemaError", "path count must be positive");
  const double T = p.horizon;
  const int steps = step_count(T - t0, dt_mc);
  const double dt = (T - t0) / steps;
  const Stepper st{p.diffusion, dt, std::sqrt(dt)};
  std::vector<double> out(n);
  detail::parallel_for(n, [&](long path) {
    std::mt19937_64 rng(path_seed(seed, path));
    std::normal_distribution<double> z;
    double x = x0;
    double best = 0.0;
    for (int k = 0;; ++k) {
      const double t = t0 + k * dt;
      const double g = k == steps ? p.gain.terminal_value(T, x) : p.gain.gain.evaluate({t, x});
      const double v = std::pow(std::fabs(g), delta);
      if (!std::isfinite(v))
        throw make_error("SimulationOverflow", "|G|^delta overflowed on path " + std::to_string(path) +
                                                   " at step " + std::to_string(k));
      best = std::max(best, v);
      if (k == steps) break;
      x = st.step(x, z(rng), path, k);
    }
    out[path] = best;
  });
  MCEstimate e = summarize(out, seed);
  if (!std::isfinite(e.mean) || !std::isfinite(e.se))
    throw make_error("SimulationOverflow", "kappa estimate is not finite");
  if (samples) *samples = std::move(out);
  return e;
}

MCEstimate estimate_xi(const ProblemSpec& p, double delta, double t0, double x0, int n, std::uint64_t seed,
                       double dt_mc) {
  if (!(delta >= 1.0)) throw make_error("SchemaError", "delta must be at least 1");
  if (n < 1) throw make_error("SchemaError", "path count must be positive");
  const double T = p.horizon;
  const int steps = step_count(T - t0, dt_mc);
  const double dt = (T - t0) / steps;
  if (p.gain.cost.is_constant()) {
    const double c = std::pow(std::fabs(p.gain.cost.constant_value()), delta) * (T - t0);
    return summarize(std::vector<double>(n, c), seed);
  }
  const Stepper st{p.diffusion, dt, std::sqrt(dt)};
  std::vector<double> out(n);
  detail::parallel_for(n, [&](long path) {
    std::mt19937_64 rng(path_seed(seed, path));
    std::normal_distribution<double> z;
    double x = x0;
    double prev = std::pow(std::fabs(p.gain.cost.evaluate({t0, x})), delta);
    double sum = 0.0;
    for (int k = 0; k < steps; ++k) {
      x = st.step(x, z(rng), path, k);
      const double c = std::pow(std::fabs(p.gain.cost.evaluate({t0 + (k + 1) * dt, x})), delta);
      sum += 0.5 * (prev + c) * dt;
      prev = c;
    }
    if (!std::isfinite(sum))
      throw make_error("SimulationOverflow", "cost integral overflowed on path " + std::to_string(path));
    out[path] = sum;
  });
  return summarize(out, seed);
}

std::string estimate_json(const MCEstimate& e) {
  nlohmann::ordered_json j{{"mean", e.mean}, {"se", e.se}, {"n", e.n}, {"seed", e.seed}};
  return j.dump();
}

}  // namespace stopline
