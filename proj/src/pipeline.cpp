#include "stopline/pipeline.hpp"

#include "stopline/conditions.hpp"
#include "stopline/errors.hpp"
#include "stopline/io.hpp"
#include "stopline/montecarlo.hpp"
#include "stopline/problems.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <set>
#include <thread>

namespace stopline {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void only_keys(const json& j, const std::string& path, const std::set<std::string>& keys) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw SchemaError(path + "/" + k, "unknown key");
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

int integer(const json& j, const std::string& path, int lo, int hi) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > hi)
    throw SchemaError(path, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double positive(const json& j, const std::string& path) {
  const double v = num(j, path);
  if (!(v > 0.0)) throw SchemaError(path, "expected a positive number");
  return v;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(num(j[k], path + "/" + std::to_string(k)));
  return out;
}

std::uint64_t seed_value(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (!s.empty() && s.size() <= 20 && s.find_first_not_of("0123456789") == std::string::npos) {
      try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used == s.size()) return v;
      } catch (const std::exception&) {
      }
    }
  }
  throw SchemaError(path, "expected an unsigned 64-bit integer");
}

double mean_dx(const RunConfig& c) { return (c.problem.x_hi - c.problem.x_lo) / c.M; }
double coarse_dt(const RunConfig& c) { return c.problem.horizon / c.N; }

ojson grid_json(const Grid& g, const StretchSpec& s) {
  ojson j;
  j["M"] = g.M();
  j["N"] = g.N();
  j["domain"] = {g.x.front(), g.x.back()};
  j["dx"] = g.mean_dx();
  j["dt"] = g.dt();
  j["stretching"] = s.type == Stretching::Uniform ? "uniform" : "geometric";
  return j;
}

ojson estimate_obj(const MCEstimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}, {"seed", e.seed}}; }

ojson error_obj(const Error& e) { return {{"kind", e.kind()}, {"message", e.what()}}; }

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ValueSurface solve_level(const RunConfig& c, int M, int N) {
  const Grid g = build_grid(c.problem.x_lo, c.problem.x_hi, M, N, c.problem.horizon, c.stretch);
  return c.problem.constrained ? solve_vi(c.problem, g, c.scheme) : solve_unconstrained(c.problem, g, c.scheme);
}

Boundary boundary_of(const RunConfig& c, const ValueSurface& vs) {
  ExtractOptions opt;
  opt.window = c.problem.window;
  return refine_boundary(vs, c.problem.orientation, opt);
}

std::vector<double> gaps_or_nan(const ValueSurface& vs, const Boundary& b) {
  try {
    return smooth_fit_gaps(vs, b);
  } catch (const Error&) {
    return std::vector<double>(b.size(), std::numeric_limits<double>::quiet_NaN());
  }
}

std::vector<std::string> truncation_warnings(const RunConfig& c, const Boundary& b) {
  std::vector<std::string> out;
  const double margin = 10.0 * b.dx;
  const auto w = c.problem.audit_window();
  int close = 0;
  for (int i = 0; i < b.size(); ++i) {
    if (!b.finite(i)) continue;
    const double gap = c.problem.orientation == Orientation::StopBelow ? w.second - b.b[i] : b.b[i] - w.first;
    if (gap < margin) ++close;
  }
  if (close > 0)
    out.push_back("boundary within 10 cells of the continuation-side truncation on " + std::to_string(close) +
                  " slices; consider a wider domain");
  return out;
}

template <class F>
void run_concurrently(int n, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int k = 0; k < n; ++k)
    pool.emplace_back([&, k] {
      try {
        body(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_artifact(const RunConfig& c, const std::string& name, const std::string& content) {
  write_file_atomic((std::filesystem::path(c.out_dir) / name).string(), content);
}

}  // namespace

bool is_config_error(const std::string& kind) {
  static const std::set<std::string> kinds = {"SchemaError",    "SyntaxError",   "UnknownIdentifier", "UnknownId",
                                              "BadDomain",      "RegularityFail", "GainAuditFail",    "ConfigIOError",
                                              "NonDifferentiable"};
  return kinds.count(kind) > 0;
}

RunConfig parse_run_config(const json& j) {
  only_keys(j, "", {"problem", "grid", "scheme", "audits", "mc", "seed", "refinements", "outputs"});
  RunConfig c;
  if (!j.contains("problem")) throw SchemaError("/problem", "required key missing");
  const json& pj = j["problem"];
  if (pj.is_string()) {
    c.problem = catalog(pj.get<std::string>());
    c.problem_echo = pj.get<std::string>();
  } else {
    c.problem = from_config(pj, &c.problem_echo);
  }

  if (j.contains("grid")) {
    const json& g = j["grid"];
    only_keys(g, "/grid", {"M", "N", "domain", "stretching"});
    if (g.contains("M")) c.M = integer(g["M"], "/grid/M", 16, 1 << 20);
    if (g.contains("N")) c.N = integer(g["N"], "/grid/N", 16, 1 << 20);
    if (g.contains("domain")) {
      const auto d = numbers(g["domain"], "/grid/domain");
      if (d.size() != 2 || !(d[0] < d[1])) throw SchemaError("/grid/domain", "expected [lo, hi] with lo < hi");
      c.problem.x_lo = d[0];
      c.problem.x_hi = d[1];
    }
    if (g.contains("stretching")) {
      const json& s = g["stretching"];
      only_keys(s, "/grid/stretching", {"type", "focus", "ratio"});
      const std::string type = s.value("type", std::string("uniform"));
      if (type == "uniform") {
        c.stretch.type = Stretching::Uniform;
      } else if (type == "geometric") {
        c.stretch.type = Stretching::Geometric;
        if (!s.contains("focus") || !s.contains("ratio"))
          throw SchemaError("/grid/stretching", "geometric stretching needs focus and ratio");
        c.stretch.focus = num(s["focus"], "/grid/stretching/focus");
        c.stretch.ratio = num(s["ratio"], "/grid/stretching/ratio");
        if (!(c.stretch.ratio >= 1.0)) throw SchemaError("/grid/stretching/ratio", "expected ratio >= 1");
      } else {
        throw SchemaError("/grid/stretching/type", "expected uniform or geometric");
      }
    }
  }

  if (j.contains("scheme")) {
    const json& s = j["scheme"];
    only_keys(s, "/scheme", {"theta", "rannacher", "omega", "tol_psor", "max_iter"});
    if (s.contains("theta")) c.scheme.theta = num(s["theta"], "/scheme/theta");
    if (!(c.scheme.theta >= 0.5 && c.scheme.theta <= 1.0)) throw SchemaError("/scheme/theta", "expected theta in [0.5, 1]");
    if (s.contains("rannacher")) c.scheme.rannacher_steps = integer(s["rannacher"], "/scheme/rannacher", 0, 1 << 20);
    if (s.contains("omega")) c.scheme.psor.omega = num(s["omega"], "/scheme/omega");
    if (!(c.scheme.psor.omega > 0.0 && c.scheme.psor.omega < 2.0)) throw SchemaError("/scheme/omega", "expected omega in (0, 2)");
    if (s.contains("tol_psor")) c.scheme.psor.tol = positive(s["tol_psor"], "/scheme/tol_psor");
    if (s.contains("max_iter")) c.scheme.psor.max_iter = integer(s["max_iter"], "/scheme/max_iter", 1, 1 << 30);
  }

  AuditConfig& a = c.audits;
  if (j.contains("audits")) {
    const json& s = j["audits"];
    only_keys(s, "/audits", {"eps_collar", "ell_min", "vx_tol", "mono_tol", "jump_factor", "t_fraction", "c3_samples",
                             "delta", "R", "c4_times", "c4_paths", "c4_x_nodes", "bootstrap", "c4_dt_mc"});
    if (s.contains("eps_collar")) a.eps_collar = positive(s["eps_collar"], "/audits/eps_collar");
    if (s.contains("ell_min")) a.ell_min = num(s["ell_min"], "/audits/ell_min");
    if (s.contains("vx_tol")) a.vx_tol = num(s["vx_tol"], "/audits/vx_tol");
    if (s.contains("mono_tol")) a.mono_tol = num(s["mono_tol"], "/audits/mono_tol");
    if (s.contains("jump_factor")) a.jump_factor = positive(s["jump_factor"], "/audits/jump_factor");
    if (s.contains("t_fraction")) a.t_fraction = positive(s["t_fraction"], "/audits/t_fraction");
    if (a.t_fraction > 1.0) throw SchemaError("/audits/t_fraction", "expected a value in (0, 1]");
    if (s.contains("c3_samples")) a.c3_samples = integer(s["c3_samples"], "/audits/c3_samples", 16, 1 << 30);
    if (s.contains("delta")) a.delta = num(s["delta"], "/audits/delta");
    if (!(a.delta > 1.0)) throw SchemaError("/audits/delta", "expected delta > 1");
    if (s.contains("R")) a.R = positive(s["R"], "/audits/R");
    if (s.contains("c4_times")) a.c4_times = numbers(s["c4_times"], "/audits/c4_times");
    if (s.contains("c4_paths")) a.c4_paths = integer(s["c4_paths"], "/audits/c4_paths", 2, 1 << 30);
    if (s.contains("c4_x_nodes")) a.c4_x_nodes = integer(s["c4_x_nodes"], "/audits/c4_x_nodes", 2, 1 << 20);
    if (s.contains("bootstrap")) a.bootstrap = integer(s["bootstrap"], "/audits/bootstrap", 0, 1 << 20);
    if (s.contains("c4_dt_mc")) a.c4_dt_mc = positive(s["c4_dt_mc"], "/audits/c4_dt_mc");
  }
  if (!a.eps_collar) a.eps_collar = 5.0 * mean_dx(c);
  if (!a.mono_tol) a.mono_tol = 2.0 * mean_dx(c);
  if (!a.c4_dt_mc) a.c4_dt_mc = coarse_dt(c) / 4.0;
  if (a.c4_times.empty()) a.c4_times = {0.0, 0.25 * c.problem.horizon, 0.5 * c.problem.horizon};
  for (std::size_t k = 0; k < a.c4_times.size(); ++k)
    if (!(a.c4_times[k] >= 0.0 && a.c4_times[k] < c.problem.horizon))
      throw SchemaError("/audits/c4_times/" + std::to_string(k), "expected a time in [0, T)");

  McConfig& m = c.mc;
  if (j.contains("mc")) {
    const json& s = j["mc"];
    only_keys(s, "/mc", {"paths", "dt_mc", "starts", "sup", "kappa_x", "kappa_delta", "kappa_paths"});
    if (s.contains("paths")) m.paths = integer(s["paths"], "/mc/paths", 2, 1 << 30);
    if (s.contains("dt_mc")) m.dt_mc = positive(s["dt_mc"], "/mc/dt_mc");
    if (s.contains("starts")) {
      const json& st = s["starts"];
      if (!st.is_array()) throw SchemaError("/mc/starts", "expected an array of [t, x]");
      for (std::size_t k = 0; k < st.size(); ++k) {
        const std::string path = "/mc/starts/" + std::to_string(k);
        const auto tx = numbers(st[k], path);
        if (tx.size() != 2) throw SchemaError(path, "expected [t, x]");
        if (!(tx[0] >= 0.0 && tx[0] < c.problem.horizon)) throw SchemaError(path, "expected t in [0, T)");
        m.starts.emplace_back(tx[0], tx[1]);
      }
    }
    if (s.contains("sup")) {
      const json& u = s["sup"];
      only_keys(u, "/mc/sup", {"enabled", "y", "eta", "h", "paths", "steps"});
      if (u.contains("enabled")) {
        if (!u["enabled"].is_boolean()) throw SchemaError("/mc/sup/enabled", "expected a boolean");
        m.sup.enabled = u["enabled"].get<bool>();
      }
      if (u.contains("y")) m.sup.y = num(u["y"], "/mc/sup/y");
      if (u.contains("eta")) m.sup.eta = positive(u["eta"], "/mc/sup/eta");
      if (u.contains("h")) {
        m.sup.h = numbers(u["h"], "/mc/sup/h");
        for (std::size_t k = 0; k < m.sup.h.size(); ++k)
          if (!(m.sup.h[k] > 0.0)) throw SchemaError("/mc/sup/h/" + std::to_string(k), "expected h > 0");
      }
      if (u.contains("paths")) m.sup.paths = integer(u["paths"], "/mc/sup/paths", 2, 1 << 30);
      if (u.contains("steps")) m.sup.steps = integer(u["steps"], "/mc/sup/steps", 1, 1 << 20);
    }
    if (s.contains("kappa_x")) m.kappa_x = numbers(s["kappa_x"], "/mc/kappa_x");
    if (s.contains("kappa_delta")) m.kappa_delta = num(s["kappa_delta"], "/mc/kappa_delta");
    if (!(m.kappa_delta > 1.0)) throw SchemaError("/mc/kappa_delta", "expected delta > 1");
    if (s.contains("kappa_paths")) m.kappa_paths = integer(s["kappa_paths"], "/mc/kappa_paths", 2, 1 << 30);
  }
  if (!m.dt_mc) m.dt_mc = coarse_dt(c) / 4.0;
  if (m.starts.empty()) {
    const auto w = c.problem.audit_window();
    for (int k = 1; k <= 5; ++k) m.starts.emplace_back(0.0, w.first + (w.second - w.first) * k / 6.0);
  }

  if (j.contains("seed")) c.seed = seed_value(j["seed"], "/seed");
  if (j.contains("refinements")) c.refinements = integer(j["refinements"], "/refinements", 1, 6);
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    only_keys(o, "/outputs", {"directory", "value_csv"});
    if (o.contains("directory")) {
      if (!o["directory"].is_string()) throw SchemaError("/outputs/directory", "expected a string");
      c.out_dir = o["directory"].get<std::string>();
    }
    if (o.contains("value_csv")) {
      if (!o["value_csv"].is_boolean()) throw SchemaError("/outputs/value_csv", "expected a boolean");
      c.write_value_csv = o["value_csv"].get<bool>();
    }
  }
  return c;
}

ojson resolved_config(const RunConfig& c) {
  ojson j;
  j["problem"] = c.problem_echo;
  ojson g;
  g["M"] = c.M;
  g["N"] = c.N;
  g["domain"] = {c.problem.x_lo, c.problem.x_hi};
  if (c.stretch.type == Stretching::Uniform)
    g["stretching"] = {{"type", "uniform"}};
  else
    g["stretching"] = {{"type", "geometric"}, {"focus", c.stretch.focus}, {"ratio", c.stretch.ratio}};
  j["grid"] = g;
  j["scheme"] = {{"theta", c.scheme.theta},
                 {"rannacher", c.scheme.rannacher_steps},
                 {"omega", c.scheme.psor.omega},
                 {"tol_psor", c.scheme.psor.tol},
                 {"max_iter", c.scheme.psor.max_iter}};
  const AuditConfig& a = c.audits;
  j["audits"] = {{"eps_collar", *a.eps_collar}, {"ell_min", a.ell_min},     {"vx_tol", a.vx_tol},
                 {"mono_tol", *a.mono_tol},     {"jump_factor", a.jump_factor}, {"t_fraction", a.t_fraction},
                 {"c3_samples", a.c3_samples},  {"delta", a.delta},         {"R", a.R},
                 {"c4_times", a.c4_times},      {"c4_paths", a.c4_paths},   {"c4_x_nodes", a.c4_x_nodes},
                 {"bootstrap", a.bootstrap},    {"c4_dt_mc", *a.c4_dt_mc}};
  ojson starts = ojson::array();
  for (const auto& [t, x] : c.mc.starts) starts.push_back({t, x});
  j["mc"] = {{"paths", c.mc.paths},
             {"dt_mc", *c.mc.dt_mc},
             {"starts", starts},
             {"sup",
              {{"enabled", c.mc.sup.enabled},
               {"y", c.mc.sup.y},
               {"eta", c.mc.sup.eta},
               {"h", c.mc.sup.h},
               {"paths", c.mc.sup.paths},
               {"steps", c.mc.sup.steps}}},
             {"kappa_x", c.mc.kappa_x},
             {"kappa_delta", c.mc.kappa_delta},
             {"kappa_paths", c.mc.kappa_paths}};
  j["seed"] = c.seed;
  j["refinements"] = c.refinements;
  j["outputs"] = {{"directory", c.out_dir}, {"value_csv", c.write_value_csv}};
  return j;
}

SolveResult run_solve(const RunConfig& c) {
  SolveResult r{Grid{}, solve_level(c, c.M, c.N), Boundary{}};
  r.grid = r.surface.grid;
  r.boundary = boundary_of(c, r.surface);
  write_artifact(c, "config.json", dump(resolved_config(c)));
  write_artifact(c, "boundary.csv", boundary_csv(r.boundary, gaps_or_nan(r.surface, r.boundary)));
  if (c.write_value_csv) write_artifact(c, "value.csv", value_csv(r.surface));
  return r;
}

ojson run_check(const RunConfig& c) {
  const int K = c.refinements;
  std::vector<ValueSurface> surfaces(K);
  run_concurrently(K, [&](int k) { surfaces[k] = solve_level(c, c.M << k, c.N << k); });
  std::vector<Boundary> levels;
  for (const auto& vs : surfaces) levels.push_back(boundary_of(c, vs));
  const ValueSurface& vs = surfaces[0];
  const Boundary& b = levels[0];
  const AuditConfig& a = c.audits;
  const GainModel gm(c.problem.gain, c.problem.diffusion);
  const double eps = *a.eps_collar;

  ojson report;
  report["label"] = "numerical evidence";
  report["problem"] = c.problem.id;
  report["orientation"] = to_string(c.problem.orientation);
  report["seed"] = c.seed;
  report["grid"] = grid_json(vs.grid, c.stretch);
  ojson lv = ojson::array();
  for (const auto& s : surfaces) lv.push_back(grid_json(s.grid, c.stretch));
  report["levels"] = lv;
  report["scheme"] = {{"theta", c.scheme.theta},
                      {"rannacher", c.scheme.rannacher_steps},
                      {"omega", c.scheme.psor.omega},
                      {"tol_psor", c.scheme.psor.tol},
                      {"max_iter", c.scheme.psor.max_iter}};
  const SurfaceAudit sa = audit_surface(vs);
  report["surface_audit"] = {{"min_v_minus_g", sa.min_v_minus_g},
                             {"max_complementarity", sa.max_complementarity},
                             {"max_terminal_error", sa.max_terminal_error},
                             {"psor_iterations", vs.psor_iterations},
                             {"psor_max_iterations", vs.psor_max_iterations}};
  report["warnings"] = truncation_warnings(c, b);
  const bool time_indep = c.problem.gain.time_independent();
  report["time_independent"] = time_indep;

  const double t_cut = a.t_fraction * c.problem.horizon;
  int i_cut = -1;
  for (int i = 0; i < b.size(); ++i)
    if (b.t[i] <= t_cut + 1e-12 * c.problem.horizon) i_cut = i;
  report["collar"] = {{"eps", eps}, {"t_max", t_cut}, {"grid_M", vs.grid.M()}, {"grid_N", vs.grid.N()}};

  std::optional<HolderEstimate> holder;
  ojson holder_json;
  try {
    holder = estimate_modulus_C3(vs, a.c3_samples, c.problem.audit_window());
    auto curve = [](const std::vector<CurvePoint>& v) {
      ojson arr = ojson::array();
      for (const auto& p : v) arr.push_back({p.at, p.value});
      return arr;
    };
    holder_json = {{"alpha", holder->alpha},     {"exp_x", holder->exp_x},   {"exp_t", holder->exp_t},
                   {"r2_x", holder->r2_x},       {"r2_t", holder->r2_t},     {"t_flat", holder->t_flat},
                   {"samples", holder->samples}, {"lag_x", curve(holder->lag_x)}, {"lag_t", curve(holder->lag_t)},
                   {"theta1_curve", curve(holder->theta1)}, {"theta2_curve", curve(holder->theta2)},
                   {"pass", holder->pass}};
  } catch (const Error& e) {
    holder_json = {{"pass", false}, {"error", error_obj(e)}};
  }
  report["holder"] = holder_json;

  std::vector<MonotoneSegment> segments;
  try {
    segments = segment_monotone(b, *a.mono_tol);
  } catch (const Error& e) {
    report["segments_note"] = error_obj(e);
  }

  bool need_c4 = false;
  for (const auto& s : segments) need_c4 = need_c4 || s.direction != Direction::Decreasing;
  std::optional<C4Result> c4;
  ojson kappa_json;
  if (need_c4) {
    try {
      c4 = check_C4(c.problem, a.delta, a.R, a.c4_times, a.c4_paths, path_seed(c.seed, 0xC4), *a.c4_dt_mc,
                    a.c4_x_nodes, a.bootstrap);
      ojson per_t = ojson::array();
      for (const auto& p : c4->per_t) per_t.push_back({{"t", p.t}, {"integral", p.integral}});
      kappa_json = {{"delta", c4->delta},   {"R", c4->R},           {"x_lo", c4->x_lo},
                    {"x_hi", c4->x_hi},     {"x_nodes", c4->x_nodes}, {"paths", c4->paths},
                    {"dt_mc", c4->dt_mc},   {"seed", c4->seed},     {"value", c4->value},
                    {"t_at_sup", c4->t_at_sup}, {"ci_lo", c4->ci_lo}, {"ci_hi", c4->ci_hi},
                    {"bootstrap", c4->bootstrap}, {"per_t", per_t}, {"pass", c4->pass}};
    } catch (const Error& e) {
      kappa_json = {{"pass", false}, {"error", error_obj(e)}};
    }
  } else {
    kappa_json = {{"skipped", "no increasing or flat segment"}};
  }
  report["kappa_integral"] = kappa_json;

  std::vector<SegmentChecks> checks;
  ojson seg_json = ojson::array();
  for (const auto& s : segments) {
    SegmentChecks sc;
    sc.segment = s;
    ojson sj;
    sj["i1"] = s.i1;
    sj["i2"] = s.i2;
    sj["t1"] = b.t[s.i1];
    sj["t2"] = b.t[s.i2];
    sj["direction"] = to_string(s.direction);
    sj["mono_tol"] = s.tol;
    const SliceRange range{s.i1, std::min(s.i2, i_cut)};
    sj["audited_slices"] = {range.i1, range.i2};
    if (range.i2 < range.i1) {
      sj["c1"] = {{"pass", false}, {"error", {{"kind", "EmptyCollar"}, {"message", "segment lies after t_max"}}}};
      sj["c2"] = sj["c1"];
    } else {
      try {
        const C1Result r = check_C1(gm, vs, b, eps, a.ell_min, range);
        ojson sens = ojson::array();
        for (const auto& w : r.sensitivity) sens.push_back({{"eps", w.eps}, {"ell", w.ell}});
        sj["c1"] = {{"ell_eps", r.ell_eps}, {"ell_min", r.ell_min}, {"eps_collar", r.eps_collar},
                    {"nodes", r.nodes},     {"slices", r.slices},   {"worst_t", r.worst_t},
                    {"worst_x", r.worst_x}, {"sensitivity", sens},  {"pass", r.pass}};
        sc.c1 = r.pass;
      } catch (const Error& e) {
        sj["c1"] = {{"pass", false}, {"error", error_obj(e)}};
      }
      try {
        const C2Result r = check_C2(gm, vs, b, eps, a.ell_min, a.vx_tol, range);
        sj["c2"] = {{"ell_prime_eps", r.ell_prime_eps}, {"min_VxGx", r.min_vxgx}, {"eps_collar", r.eps_collar},
                    {"nodes", r.nodes}, {"pass", r.pass}};
        sc.c2 = r.pass;
      } catch (const Error& e) {
        sj["c2"] = {{"pass", false}, {"error", error_obj(e)}};
      }
    }
    sc.c3 = holder && holder->pass;
    sc.c4 = c4 && c4->pass;
    sj["c3"] = sc.c3;
    sj["c4"] = sc.c4;
    checks.push_back(sc);
    seg_json.push_back(sj);
  }
  const auto verdicts = continuity_verdict(checks, time_indep);
  for (std::size_t k = 0; k < verdicts.size(); ++k) {
    seg_json[k]["verdict"] = to_string(verdicts[k].verdict);
    if (verdicts[k].verdict == Verdict::INCONCLUSIVE) seg_json[k]["reason"] = verdicts[k].reason;
    seg_json[k]["label"] = verdicts[k].label;
  }
  report["segments"] = seg_json;

  const auto gaps = gaps_or_nan(vs, b);
  double worst_gap = 0.0;
  for (int i = 0; i <= i_cut && i < static_cast<int>(gaps.size()); ++i)
    if (std::isfinite(gaps[i])) worst_gap = std::max(worst_gap, std::fabs(gaps[i]));
  report["smooth_fit"] = {{"max_abs_gap", worst_gap}, {"t_max", t_cut}};

  ojson jumps;
  if (K >= 3) {
    try {
      const JumpReport jr = detect_jumps(levels, a.jump_factor, a.t_fraction);
      jumps = ojson::parse(jumps_json(jr));
      report["jumps"] = {{"flags", jr.flags.size()}, {"candidates", jr.candidates.size()},
                         {"max_increment", jr.max_increment}};
    } catch (const Error& e) {
      jumps = {{"error", error_obj(e)}};
      report["jumps"] = jumps;
    }
  } else {
    jumps = {{"skipped", "jump detection needs at least three refinement levels"}};
    report["jumps"] = jumps;
  }

  write_artifact(c, "config.json", dump(resolved_config(c)));
  write_artifact(c, "report.json", dump(report));
  write_artifact(c, "jumps.json", dump(jumps));
  return report;
}

ojson run_mc(const RunConfig& c) {
  const ValueSurface vs = solve_level(c, c.M, c.N);
  const Boundary b = boundary_of(c, vs);
  const McConfig& m = c.mc;
  const double dt_mc = *m.dt_mc;
  ojson out;
  out["problem"] = c.problem.id;
  out["seed"] = c.seed;
  out["scheme"] = {{"method", "euler_maruyama"}, {"dt_mc", dt_mc}, {"grid", grid_json(vs.grid, c.stretch)}};

  ojson values = ojson::array();
  for (std::size_t k = 0; k < m.starts.size(); ++k) {
    const auto [t0, x0] = m.starts[k];
    ojson row{{"t", t0}, {"x", x0}};
    try {
      const MCEstimate e = estimate_value_with_boundary(c.problem, b, t0, x0, m.paths, path_seed(c.seed, 0x100 + k), dt_mc);
      const double pde = interpolate(vs, t0, x0);
      row["estimate"] = estimate_obj(e);
      row["pde_value"] = pde;
      row["within_tolerance"] = std::fabs(e.mean - pde) <= std::max(3.0 * e.se, 0.01 * std::fabs(pde));
      row["below_pde_bound"] = e.mean <= pde + 3.0 * e.se + std::sqrt(dt_mc);
    } catch (const Error& e) {
      row["error"] = error_obj(e);
    }
    values.push_back(row);
  }
  out["value_with_boundary"] = values;

  if (m.sup.enabled) {
    try {
      const SupDeviationStudy s =
          sup_deviation_study(c.problem.diffusion, m.sup.y, m.sup.eta, m.sup.h, m.sup.paths, path_seed(c.seed, 0x200),
                              m.sup.steps);
      ojson rows = ojson::array();
      for (const auto& r : s.rows) {
        ojson mom = ojson::array();
        for (const auto& e : r.moments) mom.push_back(estimate_obj(e));
        rows.push_back({{"h", r.h}, {"probability", estimate_obj(r.probability)}, {"moments", mom}, {"bound", r.bound}});
      }
      out["sup_deviation"] = {{"y", s.y},         {"eta", s.eta},   {"steps", m.sup.steps},
                              {"betas", s.betas}, {"rows", rows},   {"slope", s.slope},
                              {"C", s.C},         {"bound_holds", s.bound_holds}};
    } catch (const Error& e) {
      out["sup_deviation"] = {{"error", error_obj(e)}};
    }
  }

  ojson kappa = ojson::array();
  for (std::size_t k = 0; k < m.kappa_x.size(); ++k) {
    ojson row{{"t", 0.0}, {"x", m.kappa_x[k]}, {"delta", m.kappa_delta}};
    try {
      row["estimate"] = estimate_obj(
          estimate_kappa(c.problem, m.kappa_delta, 0.0, m.kappa_x[k], m.kappa_paths, path_seed(c.seed, 0x300 + k), dt_mc));
    } catch (const Error& e) {
      row["error"] = error_obj(e);
    }
    kappa.push_back(row);
  }
  out["kappa"] = kappa;

  if (!c.problem.gain.cost.is_zero()) {
    ojson xi = ojson::array();
    for (std::size_t k = 0; k < m.starts.size(); ++k) {
      const auto [t0, x0] = m.starts[k];
      ojson row{{"t", t0}, {"x", x0}, {"delta", 1.0}};
      try {
        row["estimate"] =
            estimate_obj(estimate_xi(c.problem, 1.0, t0, x0, m.paths, path_seed(c.seed, 0x400 + k), dt_mc));
      } catch (const Error& e) {
        row["error"] = error_obj(e);
      }
      xi.push_back(row);
    }
    out["xi"] = xi;
  }

  write_artifact(c, "config.json", dump(resolved_config(c)));
  write_artifact(c, "mc.json", dump(out));
  return out;
}

ojson run_report(const RunConfig& c) {
  const std::filesystem::path dir(c.out_dir);
  auto load = [&](const char* name) -> std::optional<ojson> {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      return ojson::parse(read_file(path.string()));
    } catch (const ojson::parse_error&) {
      return std::nullopt;
    }
  };
  auto report = load("report.json");
  auto jumps = load("jumps.json");
  if (!report || !jumps) {
    report = run_check(c);
    jumps = load("jumps.json");
  }
  auto mc = load("mc.json");
  if (!mc) mc = run_mc(c);
  if (!std::filesystem::exists(dir / "boundary.csv")) run_solve(c);

  ojson summary;
  summary["label"] = "numerical evidence";
  summary["config"] = resolved_config(c);
  ojson verdicts = ojson::array();
  for (const auto& s : (*report)["segments"]) {
    ojson v{{"t1", s["t1"]}, {"t2", s["t2"]}, {"direction", s["direction"]}, {"verdict", s["verdict"]}};
    if (s.contains("reason")) v["reason"] = s["reason"];
    verdicts.push_back(v);
  }
  summary["verdicts"] = verdicts;
  summary["report"] = *report;
  summary["jumps"] = jumps ? *jumps : ojson();
  summary["mc"] = *mc;
  write_artifact(c, "summary.json", dump(summary));
  return summary;
}

}  // namespace stopline
