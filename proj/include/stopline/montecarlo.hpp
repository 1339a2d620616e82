#pragma once

#include "stopline/boundary.hpp"
#include "stopline/diffusion.hpp"
#include "stopline/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stopline {

struct MCEstimate {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n)
  long n = 0;
  std::uint64_t seed = 0;
};

/// Mean and standard error of a sample, in index order.
MCEstimate summarize(const std::vector<double>& samples, std::uint64_t seed);

/// Seed of path k under a run seed (SplitMix64 finalizer).
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t k);

struct PathBatch {
  int n = 0;
  int steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> X;        // n x (steps + 1), row per path
  std::vector<bool> left_domain;  // path visited x outside the audit interval

  double at(int path, int k) const { return X[static_cast<std::size_t>(path) * (steps + 1) + k]; }
};

/// Euler-Maruyama X_{k+1} = X_k + mu dt + sigma sqrt(dt) Z_k with
/// steps = ceil(horizon / dt_mc). Throws Error(CoefficientBlowup).
PathBatch simulate_paths(const Diffusion& d, double x0, double horizon, double dt_mc, int n, std::uint64_t seed,
                         std::optional<std::pair<double, double>> domain = std::nullopt);

/// Discounted gain minus running cost under the rule "stop at the first
/// step on the stopping side of b, else at T". Throws Error(OrientationMismatch).
MCEstimate estimate_value_with_boundary(const ProblemSpec& p, const Boundary& b, double t0, double x0, int n,
                                        std::uint64_t seed, double dt_mc);

/// P(sup_{r <= h} |X_r - y| > eta), with a Brownian-bridge crossing test
/// between the `steps` Euler nodes.
MCEstimate estimate_sup_deviation(const Diffusion& d, double y, double h, double eta, int n, std::uint64_t seed,
                                  int steps = 64);

struct SupDeviationRow {
  double h = 0.0;
  MCEstimate probability;
  std::vector<MCEstimate> moments;  // E sup|X - y|^beta per beta
  std::vector<double> bound;        // eta^-beta C (1 + |y|^beta) h^(beta/2) per beta
};

struct SupDeviationStudy {
  double y = 0.0;
  double eta = 0.0;
  std::vector<double> betas;
  std::vector<SupDeviationRow> rows;
  std::vector<double> slope;  // fitted log-log slope of the moment in h, per beta
  std::vector<double> C;      // fitted constant per beta
  bool bound_holds = true;
};

/// Probability and moment estimates over several horizons, common seed.
SupDeviationStudy sup_deviation_study(const Diffusion& d, double y, double eta, const std::vector<double>& hs,
                                      int n, std::uint64_t seed, int steps = 64,
                                      const std::vector<double>& betas = {1.0, 2.0});

/// Average of sup_{s <= T - t} |G(t + s, X_s)|^delta over the Euler nodes.
/// Throws Error(SimulationOverflow).
MCEstimate estimate_kappa(const ProblemSpec& p, double delta, double t0, double x0, int n, std::uint64_t seed,
                          double dt_mc, std::vector<double>* samples = nullptr);

/// Average of the trapezoid sum of |C(t + s, X_s)|^delta over [0, T - t].
MCEstimate estimate_xi(const ProblemSpec& p, double delta, double t0, double x0, int n, std::uint64_t seed,
                       double dt_mc);

std::string estimate_json(const MCEstimate& e);

}  // namespace stopline
