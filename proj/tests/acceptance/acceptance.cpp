// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when a
// criterion fails that is not listed in kKnownRed.

#include "oracles/binomial.hpp"
#include "oracles/reflection.hpp"
#include "property.hpp"

#include "stopline/boundary.hpp"
#include "stopline/conditions.hpp"
#include "stopline/errors.hpp"
#include "stopline/grid.hpp"
#include "stopline/io.hpp"
#include "stopline/montecarlo.hpp"
#include "stopline/pde.hpp"
#include "stopline/pipeline.hpp"
#include "stopline/problems.hpp"
#include "stopline/quadrature.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace stopline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kObstacleTol = -1e-9;
constexpr double kComplementarityTol = 1e-8;
constexpr double kProblemSeconds = 60.0;
constexpr double kPutRelTol = 0.005;
constexpr int kTreeSteps = 2000;
constexpr double kBoundaryCells = 2.0;
constexpr double kLongSeconds = 300.0;
constexpr double kShrinkRatio = 1.5;
constexpr double kEllTarget = 0.04;
constexpr double kCiWidth = 0.1;
constexpr double kJumpKeep = 0.75;
constexpr double kPlateauEll = 1e-3;
constexpr double kMonotoneTol = 1e-10;
constexpr double kDualityTol = 1e-8;
constexpr double kFpsiTol = 1e-6;
constexpr double kGammaTol = 1e-12;
constexpr double kSupSe = 3.0;
constexpr double kSlope = 0.5;
constexpr double kSlopeTol = 0.1;
constexpr int kSupPaths = 100000;
constexpr double kSupSeconds = 120.0;
constexpr double kMcSe = 3.0;
constexpr double kMcRel = 0.01;

const std::set<int> kKnownRed = {4};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

fs::path out_dir(const std::string& name) {
  const fs::path d = fs::path("acceptance_out") / name;
  fs::remove_all(d);
  return d;
}

Outcome obstacle_consistency() {
  bool ok = true;
  std::string detail;
  for (const auto& id : catalog_ids()) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = catalog(id);
    const auto g = build_grid(p.x_lo, p.x_hi, 200, 200, p.horizon);
    const auto vs = p.constrained ? solve_vi(p, g) : solve_unconstrained(p, g);
    const auto a = audit_surface(vs);
    const double secs = seconds_since(t0);
    const bool this_ok = (!p.constrained || a.min_v_minus_g >= kObstacleTol) &&
                         a.max_complementarity <= kComplementarityTol && secs < kProblemSeconds;
    ok = ok && this_ok;
    detail += id + (p.constrained ? "" : " (no obstacle)") + ": min(V-G)=" + fmt(a.min_v_minus_g) +
              " compl=" + fmt(a.max_complementarity) + " " + fmt(secs, 3) + "s; ";
  }
  return {ok, detail};
}

Outcome put_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto tree = oracle::american_put_tree(1.0, 1.0, 0.05, 0.2, 1.0, kTreeSteps);
  const auto p = catalog("american_put");
  const auto vs = solve_vi(p, build_grid(p.x_lo, p.x_hi, 200, 200, p.horizon));
  const auto b = refine_boundary(vs, p.orientation);
  const double v = interpolate(vs, 0.0, 1.0);
  const double rel = std::fabs(v - tree.value) / tree.value;
  double worst = 0.0;
  for (int k = 1; k <= 9; ++k) {
    const double t = 0.1 * k;
    int i = 0;
    while (i + 1 < b.size() && b.t[i + 1] <= t + 1e-12) ++i;
    worst = std::max(worst, std::fabs(b.b[i] - oracle::boundary_at(tree, t)));
  }
  const double dx = vs.grid.mean_dx();
  const double secs = seconds_since(t0);
  const bool ok = rel <= kPutRelTol && worst <= kBoundaryCells * dx && secs < kLongSeconds;
  return {ok, "V(0,K)=" + fmt(v, 6) + " tree=" + fmt(tree.value, 6) + " rel=" + fmt(rel) +
                  "; max |b-b_tree|=" + fmt(worst) + " (" + fmt(worst / dx, 3) + " cells) " + fmt(secs, 3) + "s"};
}

json run_check_for(const std::string& id, int refinements, const std::string& dir) {
  json cfg = {{"problem", id}, {"refinements", refinements}, {"outputs", {{"directory", dir}, {"value_csv", false}}}};
  return json::parse(run_check(parse_run_config(cfg)).dump());
}

Outcome put_continuity() {
  const auto dir = out_dir("put_check");
  const json r = run_check_for("american_put", 4, dir.string());
  const auto jumps = json::parse(read_file((dir / "jumps.json").string()));
  std::vector<double> inc;
  for (const auto& l : jumps["levels"]) inc.push_back(l["max_increment"].get<double>());
  bool shrink = inc.size() == 4;
  std::string ratios;
  for (std::size_t l = 1; l < inc.size(); ++l) {
    const double q = inc[l - 1] / inc[l];
    shrink = shrink && q >= kShrinkRatio;
    ratios += fmt(q, 3) + (l + 1 < inc.size() ? "," : "");
  }
  bool verdict = !r["segments"].empty();
  double ell = 1e9;
  for (const auto& s : r["segments"]) {
    verdict = verdict && s["verdict"] == "T32_OK";
    ell = std::min(ell, s["c1"].value("ell_eps", 0.0));
  }
  const auto& k = r["kappa_integral"];
  const double value = k.value("value", NAN);
  const double width = k.value("ci_hi", NAN) - k.value("ci_lo", NAN);
  const bool c4 = std::isfinite(value) && width < kCiWidth * std::fabs(value);
  const bool ok = shrink && verdict && ell >= kEllTarget && c4 && jumps["flags"].empty();
  return {ok, "increment ratios " + ratios + "; verdict " + (verdict ? "T32_OK" : "other") + "; ell=" + fmt(ell) +
                  "; C.4=" + fmt(value) + " CI width " + fmt(width) + "; jump flags " +
                  std::to_string(jumps["flags"].size())};
}

Outcome plateau_counterexample() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = out_dir("coxpeskir_check");
  const json r = run_check_for("coxpeskir_plateau", 3, dir.string());
  const auto jumps = json::parse(read_file((dir / "jumps.json").string()));
  bool persistent = false;
  for (const auto& f : jumps["flags"]) {
    const auto per = f["persistence"].get<std::vector<double>>();
    bool keep = per.size() >= 3;
    for (std::size_t l = 1; l < per.size(); ++l) keep = keep && per[l] >= kJumpKeep * per[l - 1];
    persistent = persistent || keep;
  }
  double ell = 1e9;
  for (const auto& s : r["segments"]) ell = std::min(ell, s["c1"].value("ell_eps", 1e9));
  std::string verdicts;
  for (const auto& s : r["segments"]) verdicts += s["verdict"].get<std::string>() + "(" + s.value("reason", "") + ") ";
  std::string inc;
  for (const auto& l : jumps["levels"]) inc += fmt(l["max_increment"].get<double>()) + " ";
  const double secs = seconds_since(t0);
  const bool ok = persistent && ell <= kPlateauEll && secs < kLongSeconds;
  return {ok, std::string("persistent jump flag ") + (persistent ? "yes" : "no") + " (max increments " + inc +
                  "); C.1 ell=" + fmt(ell) + (ell <= kPlateauEll ? " ok" : " too large") + "; verdicts " + verdicts +
                  fmt(secs, 3) + "s"};
}

Outcome time_independent() {
  const auto p = catalog("time_indep_c1");
  const auto vs = solve_vi(p, build_grid(p.x_lo, p.x_hi, 200, 200, p.horizon));
  double worst = 0.0;
  for (int i = 0; i < vs.grid.N(); ++i)
    for (int j = 0; j <= vs.grid.M(); ++j) worst = std::max(worst, vs.v(i + 1, j) - vs.v(i, j));
  ExtractOptions opt;
  opt.window = p.window;
  const auto b = refine_boundary(vs, p.orientation, opt);
  const double tol = kBoundaryCells * vs.grid.mean_dx();
  double drop = 0.0;
  bool finite = true;
  for (int i = 0; i + 1 < b.size(); ++i) {
    finite = finite && b.usable(i) && b.usable(i + 1);
    drop = std::max(drop, b.b[i] - b.b[i + 1]);
  }
  const bool ok = worst <= kMonotoneTol && finite && drop <= tol;
  return {ok, "max V[i+1]-V[i]=" + fmt(worst) + "; largest boundary decrease " + fmt(drop) + " (tol " + fmt(tol) + ")"};
}

Outcome duality() {
  double worst = 0.0;
  prop::for_all(20, 6, [&](prop::Gen& g, int) {
    const double a = g.uniform(-1, 1), b = g.uniform(0.5, 2), c = g.uniform(-1, 1);
    const double m0 = g.uniform(-1, 1), m1 = g.uniform(-0.5, 0.5);
    const double s0 = g.uniform(0.5, 1.5), s1 = g.uniform(0, 0.5);
    const TestFunction psi(g.uniform(-1, 1), g.uniform(0.3, 1.0));
    const Diffusion d(Expr::parse(std::to_string(m0) + " + " + std::to_string(m1) + "*x"),
                      Expr::parse(std::to_string(s0) + " + " + std::to_string(s1) + "*x^2"));
    const Expr f = Expr::parse(std::to_string(a) + "*sin(" + std::to_string(b) + "*x) + " + std::to_string(c) + "*x^2");
    worst = std::max(worst, adjoint_duality_gap(d, f, psi.expr(), psi.lo(), psi.hi(), 2000));
  });
  return {worst <= kDualityTol, "worst gap over 20 instances " + fmt(worst)};
}

Outcome proof_functionals() {
  ProblemSpec p;
  p.gain.gain = Expr::parse("0");
  p.x_lo = -3;
  p.x_hi = 3;
  const GainModel gm(p.gain, p.diffusion);
  ValueSurface vs;
  const int M = 600, N = 200;
  vs.grid = build_grid(-3.0, 3.0, M, N, 1.0);
  const std::size_t total = static_cast<std::size_t>(N + 1) * (M + 1);
  vs.V.assign(total, 0.0);
  vs.G.assign(total, 0.0);
  vs.residual.assign(total, 0.0);
  vs.pde_residual.assign(total, 0.0);
  vs.indicator.assign(total, Phase::Continue);
  const double t0 = 0.3;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= M; ++j) vs.V[vs.at(i, j)] = (vs.grid.t[i] - t0) * vs.grid.x[j] + 5.0;
  const TestFunction psi(0.1, 0.5);
  const auto f = F_psi_series(gm, vs, psi, 10, 190, -1.0, 1.0);
  double fw = 0.0;
  for (double v : f.direct) fw = std::max(fw, std::fabs(v - 1.0));

  const Diffusion d(Expr::parse("0.2*x"), Expr::parse("0.5 + 0.1*x^2"));
  double lin = 0.0;
  double lowest = 1e300;
  prop::for_all(20, 7, [&](prop::Gen& g, int) {
    const TestFunction q(g.uniform(-1, 1), g.uniform(0.2, 0.8));
    const std::string th = std::to_string(g.uniform(0.0, 3.0)) + " + " + std::to_string(g.uniform(0.0, 2.0)) + "*x^2";
    const double lam = g.uniform(0.1, 5.0);
    const double one = gamma_functional(d, Expr::parse(th), q, 2000);
    const double scaled = gamma_functional(d, Expr::parse(std::to_string(lam) + "*(" + th + ")"), q, 2000);
    const double lam_exact = std::stod(std::to_string(lam));
    lin = std::max(lin, std::fabs(scaled - lam_exact * one) / std::max(1.0, std::fabs(one)));
    lowest = std::min(lowest, one);
  });
  const bool ok = fw <= kFpsiTol && lin <= kGammaTol && lowest >= 0.0;
  return {ok, "F_psi max |F-1|=" + fmt(fw) + " over " + std::to_string(f.direct.size()) + " slices; gamma linearity " +
                  fmt(lin) + "; min gamma " + fmt(lowest)};
}

Outcome sup_deviation() {
  const auto t0 = std::chrono::steady_clock::now();
  const Diffusion bm(Expr::parse("0"), Expr::parse("1"));
  const auto e = estimate_sup_deviation(bm, 0.0, 1.0, 1.0, kSupPaths, path_seed(20260101, 8), 64);
  const double ref = oracle::bm_exit_probability(1.0, 1.0);
  const auto s = sup_deviation_study(bm, 0.0, 1.0, {1.0, 0.25, 0.0625}, kSupPaths, path_seed(20260101, 9), 64);
  const double slope = s.slope.at(0);
  const double secs = seconds_since(t0);
  const bool ok = std::fabs(e.mean - ref) <= kSupSe * e.se && std::fabs(slope - kSlope) <= kSlopeTol && secs < kSupSeconds;
  return {ok, "P(h=1,eta=1)=" + fmt(e.mean, 5) + " oracle " + fmt(ref, 5) + " (" + fmt(std::fabs(e.mean - ref) / e.se, 3) +
                  " SE); moment slope " + fmt(slope, 4) + "; " + fmt(secs, 3) + "s"};
}

Outcome mc_cross_validation() {
  const auto dir = out_dir("put_mc");
  json cfg = {{"problem", "american_put"},
              {"mc", {{"paths", 40000}, {"starts", {{0.0, 0.8}, {0.0, 0.9}, {0.0, 1.0}, {0.0, 1.1}, {0.0, 1.2}}},
                      {"sup", {{"enabled", false}}}}},
              {"outputs", {{"directory", dir.string()}, {"value_csv", false}}}};
  const RunConfig c = parse_run_config(cfg);
  const auto r = run_mc(c);
  bool ok = r["value_with_boundary"].size() == 5;
  const double sq = std::sqrt(*c.mc.dt_mc);
  std::string detail;
  for (const auto& row : r["value_with_boundary"]) {
    if (!row.contains("estimate")) {
      ok = false;
      continue;
    }
    const double m = row["estimate"]["mean"], se = row["estimate"]["se"], pde = row["pde_value"];
    const bool within = std::fabs(m - pde) <= std::max(kMcSe * se, kMcRel * std::fabs(pde));
    const bool bound = m <= pde + kMcSe * se + sq;
    ok = ok && within && bound;
    detail += "x=" + fmt(row["x"].get<double>(), 2) + ": " + fmt(m, 5) + " vs " + fmt(pde, 5) + (within && bound ? "" : " (!)") + "; ";
  }
  return {ok, detail};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_file(e.path().string());
  return out;
}

Outcome determinism() {
  const auto dir = out_dir("determinism");
  json cfg = {{"problem", "american_put"},
              {"grid", {{"M", 100}, {"N", 100}}},
              {"seed", 777},
              {"audits", {{"c4_paths", 500}}},
              {"mc", {{"paths", 5000}, {"sup", {{"paths", 5000}}}, {"kappa_x", {1.0}}, {"kappa_paths", 500}}},
              {"outputs", {{"directory", dir.string()}}}};
  auto run_all = [&] {
    const RunConfig c = parse_run_config(cfg);
    run_solve(c);
    run_check(c);
    run_mc(c);
    run_report(c);
    return snapshot(dir);
  };
  setenv("STOPLINE_THREADS", "1", 1);
  const auto first = run_all();
  fs::remove_all(dir);
  setenv("STOPLINE_THREADS", "3", 1);
  const auto second = run_all();
  unsetenv("STOPLINE_THREADS");
  bool ok = first.size() >= 7 && first.size() == second.size();
  std::string names;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    const bool same = it != second.end() && it->second == bytes;
    ok = ok && same;
    names += name + (same ? "" : " (differs)") + " ";
  }
  return {ok, std::to_string(first.size()) + " artifacts byte-identical across runs: " + names};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "obstacle consistency", obstacle_consistency},
      {2, "American put against the binomial tree", put_oracle},
      {3, "continuity evidence for the put", put_continuity},
      {4, "counterexample detection on the plateau", plateau_counterexample},
      {5, "time-independent monotonicity", time_independent},
      {6, "adjoint duality", duality},
      {7, "F_psi and gamma functionals", proof_functionals},
      {8, "sup-deviation probability and moment slope", sup_deviation},
      {9, "Monte Carlo against the PDE value", mc_cross_validation},
      {10, "determinism", determinism},
  };
  int unexpected = 0;
  int known = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) (kKnownRed.count(c.id) ? known : unexpected)++;
  }
  std::printf("summary: %d unexpected failure(s), %d known red criterion(s)\n", unexpected, known);
  return unexpected ? 1 : 0;
}
