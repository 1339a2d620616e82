#include "stopline/problems.hpp"

#include "stopline/errors.hpp"

#include <cmath>
#include <set>

namespace stopline {

namespace {

ProblemSpec american_put() {
  ProblemSpec p;
  p.id = "american_put";
  p.diffusion = Diffusion(Expr::parse("0.05*x"), Expr::parse("0.2*x"));
  p.gain.gain = Expr::parse("pos(1 - x)");
  p.gain.discount = Expr::constant(0.05);
  p.gain.kinks = {1.0};
  p.horizon = 1.0;
  p.x_lo = 0.2;
  p.x_hi = 3.2;
  p.orientation = Orientation::StopBelow;
  return p;
}

ProblemSpec coxpeskir_plateau() {
  auto table = std::make_shared<FunctionTable>();
  table->add_piecewise_linear("F", {{-1.0, 0.0}, {-0.4, 0.5}, {0.4, 0.5}, {1.0, 1.0}});
  ProblemSpec p;
  p.id = "coxpeskir_plateau";
  p.functions = table;
  p.diffusion = Diffusion();
  p.gain.gain = Expr::parse("abs(x) - 2*F_int(x)", *table);
  p.gain.kinks = {-1.0, -0.4, 0.0, 0.4, 1.0};
  p.horizon = 1.0;
  p.x_lo = -2.5;
  p.x_hi = 2.5;
  p.orientation = Orientation::StopBelow;
  p.bc_lo = SideBc::Dirichlet;
  p.bc_hi = SideBc::Dirichlet;
  p.window = std::make_pair(-2.5, 0.0);
  return p;
}

ProblemSpec harmonic_allstop() {
  ProblemSpec p;
  p.id = "harmonic_allstop";
  p.gain.gain = Expr::parse("x");
  p.horizon = 1.0;
  p.x_lo = -2.0;
  p.x_hi = 2.0;
  return p;
}

ProblemSpec heat_unconstrained() {
  ProblemSpec p;
  p.id = "heat_unconstrained";
  p.gain.gain = Expr::parse("x^2");
  p.gain.terminal = Expr::parse("x^2");
  p.horizon = 1.0;
  p.x_lo = -6.0;
  p.x_hi = 6.0;
  p.bc_lo = SideBc::Linear;
  p.bc_hi = SideBc::Linear;
  p.constrained = false;
  return p;
}

ProblemSpec time_indep_c1() {
  ProblemSpec p;
  p.id = "time_indep_c1";
  p.gain.gain = Expr::parse("piecewise(x < 0, -x^2, x)");
  p.gain.kinks = {0.0};
  p.horizon = 1.0;
  p.x_lo = -3.0;
  p.x_hi = 3.0;
  return p;
}

}  // namespace

std::vector<std::string> catalog_ids() {
  return {"american_put", "coxpeskir_plateau", "harmonic_allstop", "heat_unconstrained", "time_indep_c1"};
}

ProblemSpec catalog(const std::string& id) {
  if (id == "american_put") return american_put();
  if (id == "coxpeskir_plateau") return coxpeskir_plateau();
  if (id == "harmonic_allstop") return harmonic_allstop();
  if (id == "heat_unconstrained") return heat_unconstrained();
  if (id == "time_indep_c1") return time_indep_c1();
  throw make_error("UnknownId", "unknown catalog id '" + id + "'");
}

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers_at(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number_at(j[k], path + "/" + std::to_string(k)));
  return out;
}

std::pair<double, double> interval_at(const json& j, const std::string& path) {
  const auto v = numbers_at(j, path);
  if (v.size() != 2) throw SchemaError(path, "expected [lo, hi]");
  if (!(v[0] < v[1])) throw SchemaError(path, "expected lo < hi");
  return {v[0], v[1]};
}

Expr expr_at(const json& j, const std::string& path, const FunctionTable& table) {
  const std::string text = string_at(j, path);
  try {
    return Expr::parse(text, table);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

SideBc bc_at(const json& j, const std::string& path) {
  const std::string s = string_at(j, path);
  if (s == "auto") return SideBc::Auto;
  if (s == "dirichlet") return SideBc::Dirichlet;
  if (s == "linear") return SideBc::Linear;
  throw SchemaError(path, "expected one of auto, dirichlet, linear");
}

}  // namespace

ProblemSpec from_config(const json& j, ojson* resolved) {
  if (!j.is_object()) throw SchemaError("/problem", "expected an object or a catalog id");
  static const std::set<std::string> known = {"id", "mu", "sigma", "gain", "terminal", "discount", "cost",
                                               "horizon", "domain", "orientation", "kinks", "breakpoints",
                                               "constants", "functions", "bc_lo", "bc_hi", "window",
                                               "constrained"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw SchemaError("/problem/" + key, "unknown key");
  for (const char* key : {"gain", "domain"})
    if (!j.contains(key)) throw SchemaError(std::string("/problem/") + key, "required key missing");

  auto table = std::make_shared<FunctionTable>();
  ojson echo_constants = ojson::object();
  if (j.contains("constants")) {
    const json& c = j["constants"];
    if (!c.is_object()) throw SchemaError("/problem/constants", "expected an object");
    for (const auto& [name, value] : c.items()) {
      const double v = number_at(value, "/problem/constants/" + name);
      table->add_constant(name, v);
      echo_constants[name] = v;
    }
  }
  ojson echo_functions = ojson::object();
  if (j.contains("functions")) {
    const json& f = j["functions"];
    if (!f.is_object()) throw SchemaError("/problem/functions", "expected an object");
    for (const auto& [name, value] : f.items()) {
      const std::string path = "/problem/functions/" + name;
      if (!value.is_object() || value.size() != 1 || !value.contains("piecewise_linear"))
        throw SchemaError(path, "expected {\"piecewise_linear\": [[x, y], ...]}");
      const json& pts = value["piecewise_linear"];
      if (!pts.is_array()) throw SchemaError(path + "/piecewise_linear", "expected an array of [x, y]");
      std::vector<std::pair<double, double>> points;
      ojson echo_pts = ojson::array();
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto xy = numbers_at(pts[k], path + "/piecewise_linear/" + std::to_string(k));
        if (xy.size() != 2) throw SchemaError(path + "/piecewise_linear/" + std::to_string(k), "expected [x, y]");
        points.emplace_back(xy[0], xy[1]);
        echo_pts.push_back({xy[0], xy[1]});
      }
      try {
        table->add_piecewise_linear(name, points);
      } catch (const Error& e) {
        throw SchemaError(path, e.what());
      }
      echo_functions[name] = {{"piecewise_linear", echo_pts}};
    }
  }

  auto text = [&](const char* key, const char* fallback) {
    return j.contains(key) ? string_at(j[key], std::string("/problem/") + key) : std::string(fallback);
  };
  auto expr = [&](const char* key, const char* fallback) {
    return expr_at(json(text(key, fallback)), std::string("/problem/") + key, *table);
  };

  ProblemSpec p;
  p.id = text("id", "custom");
  p.functions = table;
  std::vector<double> breakpoints;
  if (j.contains("breakpoints")) breakpoints = numbers_at(j["breakpoints"], "/problem/breakpoints");
  const Expr mu = expr("mu", "0");
  const Expr sigma = expr("sigma", "1");
  for (const auto& [key, e] : {std::pair<const char*, const Expr*>{"mu", &mu}, {"sigma", &sigma}})
    if (e->depends_on(Var::T)) throw SchemaError(std::string("/problem/") + key, "coefficient must not depend on t");
  p.diffusion = Diffusion(mu, sigma, breakpoints);
  p.gain.gain = expr("gain", "0");
  if (j.contains("terminal")) {
    p.gain.terminal = expr("terminal", "0");
    if (p.gain.terminal->depends_on(Var::T)) throw SchemaError("/problem/terminal", "terminal gain must not depend on t");
  }
  p.gain.discount = expr("discount", "0");
  if (p.gain.discount.depends_on(Var::T)) throw SchemaError("/problem/discount", "discount must not depend on t");
  p.gain.cost = expr("cost", "0");
  if (j.contains("kinks")) p.gain.kinks = numbers_at(j["kinks"], "/problem/kinks");
  p.horizon = j.contains("horizon") ? number_at(j["horizon"], "/problem/horizon") : 1.0;
  if (!(p.horizon > 0.0)) throw SchemaError("/problem/horizon", "horizon must be positive");
  std::tie(p.x_lo, p.x_hi) = interval_at(j["domain"], "/problem/domain");
  const std::string orient = text("orientation", "stop_below");
  try {
    p.orientation = orientation_from_string(orient);
  } catch (const Error& e) {
    throw SchemaError("/problem/orientation", e.what());
  }
  if (j.contains("bc_lo")) p.bc_lo = bc_at(j["bc_lo"], "/problem/bc_lo");
  if (j.contains("bc_hi")) p.bc_hi = bc_at(j["bc_hi"], "/problem/bc_hi");
  if (j.contains("window")) p.window = interval_at(j["window"], "/problem/window");
  if (j.contains("constrained")) {
    if (!j["constrained"].is_boolean()) throw SchemaError("/problem/constrained", "expected a boolean");
    p.constrained = j["constrained"].get<bool>();
  }

  const RegularityReport reg = check_regularity(p.diffusion, p.x_lo, p.x_hi);
  if (!reg.pass) {
    std::string msg = "diffusion regularity audit failed on [" + std::to_string(p.x_lo) + ", " +
                      std::to_string(p.x_hi) + "]";
    for (const auto& f : reg.failures) msg += "; " + f;
    throw make_error("RegularityFail", msg);
  }
  const GainAudit ga = audit_gain(p.gain, p.horizon, p.x_lo, p.x_hi);
  if (!ga.pass) {
    std::string msg = "gain audit failed";
    for (const auto& f : ga.failures) msg += "; " + f;
    throw make_error("GainAuditFail", msg);
  }

  if (resolved) {
    auto bc_name = [](SideBc b) { return b == SideBc::Auto ? "auto" : b == SideBc::Dirichlet ? "dirichlet" : "linear"; };
    ojson r;
    r["id"] = p.id;
    r["mu"] = text("mu", "0");
    r["sigma"] = text("sigma", "1");
    r["gain"] = text("gain", "0");
    if (p.gain.terminal) r["terminal"] = text("terminal", "0");
    r["discount"] = text("discount", "0");
    r["cost"] = text("cost", "0");
    r["horizon"] = p.horizon;
    r["domain"] = {p.x_lo, p.x_hi};
    r["orientation"] = to_string(p.orientation);
    r["kinks"] = p.gain.kinks;
    r["breakpoints"] = breakpoints;
    r["constants"] = echo_constants;
    r["functions"] = echo_functions;
    r["bc_lo"] = bc_name(p.bc_lo);
    r["bc_hi"] = bc_name(p.bc_hi);
    if (p.window) r["window"] = {p.window->first, p.window->second};
    r["constrained"] = p.constrained;
    *resolved = std::move(r);
  }
  return p;
}

}  // namespace stopline
