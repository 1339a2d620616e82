#include "stopline/stopline.h"

#include "stopline/errors.hpp"
#include "stopline/pipeline.hpp"
#include "stopline/problems.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct stopline_run {
  nlohmann::json config = nlohmann::json::object();
};

struct stopline_surface {
  stopline::ValueSurface surface;
  stopline::Boundary boundary;
};

namespace {

using stopline::Error;

thread_local std::string last_error;

int fail(int code, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j{{"code", code}, {"kind", kind}, {"message", message}};
  last_error = j.dump();
  return code;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return STOPLINE_OK;
  } catch (const Error& e) {
    return fail(stopline::is_config_error(e.kind()) ? STOPLINE_ERR_CONFIG : STOPLINE_ERR_SOLVER, e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(STOPLINE_ERR_CONFIG, "SchemaError", e.what());
  } catch (const std::bad_alloc&) {
    return fail(STOPLINE_ERR_SOLVER, "OutOfMemory", "allocation failed");
  } catch (const std::exception& e) {
    return fail(STOPLINE_ERR_SOLVER, "InternalError", e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw stopline::SchemaError("/", std::string(what) + " must not be NULL");
}

// Applies a change to a copy and keeps it only if the result validates.
template <class F>
int update(stopline_run* run, F&& change) {
  return guarded([&] {
    require(run, "run");
    nlohmann::json next = run->config;
    change(next);
    stopline::parse_run_config(next);
    run->config = std::move(next);
  });
}

}  // namespace

extern "C" {

const char* stopline_version(void) { return "0.1.0"; }

const char* stopline_last_error(void) { return last_error.c_str(); }

void stopline_string_free(char* s) { std::free(s); }

int stopline_catalog_size(void) { return static_cast<int>(stopline::catalog_ids().size()); }

const char* stopline_catalog_id(int k) {
  static const std::vector<std::string> ids = stopline::catalog_ids();
  if (k < 0 || k >= static_cast<int>(ids.size())) return nullptr;
  return ids[k].c_str();
}

int stopline_run_create(const char* config_json, stopline_run** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto run = new stopline_run;
    try {
      if (config_json && *config_json) run->config = nlohmann::json::parse(config_json);
      if (!run->config.is_object()) throw stopline::SchemaError("/", "configuration must be a JSON object");
      if (run->config.contains("problem")) stopline::parse_run_config(run->config);
    } catch (...) {
      delete run;
      throw;
    }
    *out = run;
  });
}

void stopline_run_destroy(stopline_run* run) { delete run; }

int stopline_run_set_problem(stopline_run* run, const char* problem) {
  return update(run, [&](nlohmann::json& j) {
    require(problem, "problem");
    const std::string s(problem);
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && s[first] == '{')
      j["problem"] = nlohmann::json::parse(s);
    else
      j["problem"] = s;
  });
}

int stopline_run_set_grid(stopline_run* run, int M, int N) {
  return update(run, [&](nlohmann::json& j) {
    j["grid"]["M"] = M;
    j["grid"]["N"] = N;
  });
}

int stopline_run_set_seed(stopline_run* run, uint64_t seed) {
  return update(run, [&](nlohmann::json& j) { j["seed"] = seed; });
}

int stopline_run_set_refinements(stopline_run* run, int k) {
  return update(run, [&](nlohmann::json& j) { j["refinements"] = k; });
}

int stopline_run_set_output(stopline_run* run, const char* directory) {
  return update(run, [&](nlohmann::json& j) {
    require(directory, "directory");
    j["outputs"]["directory"] = directory;
  });
}

int stopline_run_resolved_config(const stopline_run* run, char** json_out) {
  return guarded([&] {
    require(run, "run");
    require(json_out, "json_out");
    *json_out = copy_string(stopline::resolved_config(stopline::parse_run_config(run->config)).dump(2));
  });
}

int stopline_run_solve(const stopline_run* run) {
  return guarded([&] {
    require(run, "run");
    stopline::run_solve(stopline::parse_run_config(run->config));
  });
}

int stopline_run_check(const stopline_run* run, char** json_out) {
  return guarded([&] {
    require(run, "run");
    const auto r = stopline::run_check(stopline::parse_run_config(run->config));
    if (json_out) *json_out = copy_string(r.dump());
  });
}

int stopline_run_mc(const stopline_run* run, char** json_out) {
  return guarded([&] {
    require(run, "run");
    const auto r = stopline::run_mc(stopline::parse_run_config(run->config));
    if (json_out) *json_out = copy_string(r.dump());
  });
}

int stopline_run_report(const stopline_run* run, char** json_out) {
  return guarded([&] {
    require(run, "run");
    const auto r = stopline::run_report(stopline::parse_run_config(run->config));
    if (json_out) *json_out = copy_string(r.dump());
  });
}

int stopline_surface_solve(const stopline_run* run, stopline_surface** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = nullptr;
    const auto c = stopline::parse_run_config(run->config);
    const auto g = stopline::build_grid(c.problem.x_lo, c.problem.x_hi, c.M, c.N, c.problem.horizon, c.stretch);
    auto s = new stopline_surface;
    try {
      s->surface = c.problem.constrained ? stopline::solve_vi(c.problem, g, c.scheme)
                                         : stopline::solve_unconstrained(c.problem, g, c.scheme);
      stopline::ExtractOptions opt;
      opt.window = c.problem.window;
      s->boundary = stopline::refine_boundary(s->surface, c.problem.orientation, opt);
    } catch (...) {
      delete s;
      throw;
    }
    *out = s;
  });
}

void stopline_surface_destroy(stopline_surface* s) { delete s; }

int stopline_surface_shape(const stopline_surface* s, int* M, int* N) {
  return guarded([&] {
    require(s, "surface");
    if (M) *M = s->surface.grid.M();
    if (N) *N = s->surface.grid.N();
  });
}

int stopline_surface_value(const stopline_surface* s, double t, double x, double* v) {
  return guarded([&] {
    require(s, "surface");
    require(v, "v");
    *v = stopline::interpolate(s->surface, t, x);
  });
}

int stopline_surface_boundary(const stopline_surface* s, int i, double* t, double* b) {
  return guarded([&] {
    require(s, "surface");
    if (i < 0 || i >= s->boundary.size())
      throw stopline::SchemaError("/i", "slice index out of range [0, " + std::to_string(s->boundary.size()) + ")");
    if (t) *t = s->boundary.t[i];
    if (b) *b = s->boundary.b[i];
  });
}

}  // extern "C"
