#pragma once

// Run configuration and the solve / check / mc / report pipelines behind the
// command-line tool. Configuration keys are listed in README.md.

#include "stopline/boundary.hpp"
#include "stopline/grid.hpp"
#include "stopline/pde.hpp"
#include "stopline/problem.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stopline {

struct AuditConfig {
  std::optional<double> eps_collar;  // default 5 mean cell widths
  double ell_min = 1e-6;
  double vx_tol = 1e-6;
  std::optional<double> mono_tol;    // default 2 mean cell widths
  double jump_factor = 10.0;
  double t_fraction = 0.95;
  int c3_samples = 20000;
  double delta = 2.0;
  double R = 1.0;
  std::vector<double> c4_times;      // default {0, T/4, T/2}
  int c4_paths = 2000;
  int c4_x_nodes = 21;
  int bootstrap = 200;
  std::optional<double> c4_dt_mc;    // default dt / 4
};

struct SupConfig {
  bool enabled = true;
  double y = 0.0;
  double eta = 1.0;
  std::vector<double> h = {1.0, 0.25, 0.0625};
  int paths = 20000;
  int steps = 64;
};

struct McConfig {
  int paths = 20000;
  std::optional<double> dt_mc;                     // default dt / 4
  std::vector<std::pair<double, double>> starts;   // (t, x); default 5 points across the window at t = 0
  SupConfig sup;
  std::vector<double> kappa_x;                     // start points of E sup |G|^delta at t = 0
  double kappa_delta = 2.0;
  int kappa_paths = 2000;
};

struct RunConfig {
  ProblemSpec problem;
  nlohmann::ordered_json problem_echo;  // catalog id or resolved inline object
  int M = 200;
  int N = 200;
  StretchSpec stretch;
  Scheme scheme;
  AuditConfig audits;
  McConfig mc;
  std::uint64_t seed = 20260101;
  int refinements = 3;
  std::string out_dir = "out";
  bool write_value_csv = true;
};

/// Validates a configuration object; throws SchemaError(path) and the
/// problem errors of from_config.
RunConfig parse_run_config(const nlohmann::json& j);

/// Every field of the run with defaults made explicit. Parsing the echo gives
/// back the same run.
nlohmann::ordered_json resolved_config(const RunConfig& c);

/// True for error kinds caused by the configuration rather than the numerics.
bool is_config_error(const std::string& kind);

struct SolveResult {
  Grid grid;
  ValueSurface surface;
  Boundary boundary;
};

/// Solves at the configured grid and writes boundary.csv, value.csv and
/// config.json into the output directory.
SolveResult run_solve(const RunConfig& c);

/// Solves `refinements` levels concurrently, audits the conditions per
/// monotone segment of the base level and writes report.json and jumps.json.
nlohmann::ordered_json run_check(const RunConfig& c);

/// Monte Carlo estimates; writes mc.json.
nlohmann::ordered_json run_mc(const RunConfig& c);

/// Merges report.json, jumps.json and mc.json (running the stages whose
/// artifacts are missing) into summary.json.
nlohmann::ordered_json run_report(const RunConfig& c);

}  // namespace stopline
