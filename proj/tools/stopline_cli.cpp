// Command-line front end. Talks to the library only through stopline.h.

#include "stopline/stopline.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>

namespace {

using json = nlohmann::ordered_json;

struct Options {
  std::string problem;
  std::string config;
  std::string grid;
  std::string out;
  std::string seed;
  int refinements = 0;
};

int emit_error(int code, const std::string& kind, const std::string& message) {
  json j{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return code;
}

int emit_library_error(int code) {
  json err = json::parse(stopline_last_error(), nullptr, false);
  if (err.is_discarded() || !err.is_object()) err = {{"code", code}, {"kind", "Unknown"}, {"message", ""}};
  std::cerr << json{{"error", err}}.dump() << "\n";
  return code;
}

std::optional<std::uint64_t> parse_u64(const std::string& s) {
  if (s.empty() || s.size() > 20 || s.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

class Run {
public:
  ~Run() { stopline_run_destroy(run_); }
  stopline_run* get() { return run_; }
  stopline_run** out() { return &run_; }

private:
  stopline_run* run_ = nullptr;
};

int execute(const std::string& command, const Options& o) {
  std::string text;
  if (!o.config.empty()) {
    std::ifstream in(o.config, std::ios::binary);
    if (!in) return emit_error(STOPLINE_ERR_CONFIG, "ConfigIOError", "cannot read config file '" + o.config + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  Run run;
  int rc = stopline_run_create(text.c_str(), run.out());
  if (rc) return emit_library_error(rc);
  if (!o.problem.empty() && (rc = stopline_run_set_problem(run.get(), o.problem.c_str()))) return emit_library_error(rc);
  if (!o.grid.empty()) {
    static const std::regex pattern(R"(^\s*(\d{1,9})\s*[xX]\s*(\d{1,9})\s*$)");
    std::smatch m;
    if (!std::regex_match(o.grid, m, pattern))
      return emit_error(STOPLINE_ERR_CONFIG, "SchemaError", "/grid: expected --grid MxN, got '" + o.grid + "'");
    if ((rc = stopline_run_set_grid(run.get(), std::stoi(m[1]), std::stoi(m[2])))) return emit_library_error(rc);
  }
  std::string seed = o.seed;
  if (seed.empty()) {
    if (const char* env = std::getenv("STOPLINE_SEED")) seed = env;
  }
  if (!seed.empty()) {
    const auto v = parse_u64(seed);
    if (!v) return emit_error(STOPLINE_ERR_CONFIG, "SchemaError", "/seed: expected an unsigned 64-bit integer, got '" + seed + "'");
    if ((rc = stopline_run_set_seed(run.get(), *v))) return emit_library_error(rc);
  }
  if (o.refinements && (rc = stopline_run_set_refinements(run.get(), o.refinements))) return emit_library_error(rc);
  if (!o.out.empty() && (rc = stopline_run_set_output(run.get(), o.out.c_str()))) return emit_library_error(rc);

  char* resolved = nullptr;
  if ((rc = stopline_run_resolved_config(run.get(), &resolved))) return emit_library_error(rc);
  const json config = json::parse(resolved);
  stopline_string_free(resolved);

  json artifacts = json::array();
  if (command == "solve") {
    rc = stopline_run_solve(run.get());
    artifacts = {"config.json", "boundary.csv"};
    if (config["outputs"]["value_csv"].get<bool>()) artifacts.push_back("value.csv");
  } else if (command == "check") {
    rc = stopline_run_check(run.get(), nullptr);
    artifacts = {"config.json", "report.json", "jumps.json"};
  } else if (command == "mc") {
    rc = stopline_run_mc(run.get(), nullptr);
    artifacts = {"config.json", "mc.json"};
  } else {
    rc = stopline_run_report(run.get(), nullptr);
    artifacts = {"summary.json"};
  }
  if (rc) return emit_library_error(rc);
  json done{{"command", command},
            {"out", config["outputs"]["directory"]},
            {"seed", config["seed"]},
            {"artifacts", artifacts},
            {"config", config}};
  std::cout << done.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-boundary solver and continuity audits for one-dimensional optimal stopping problems"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(stopline_version()));
  Options o;
  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {
      {"solve", "solve the obstacle problem; writes boundary.csv and value.csv"},
      {"check", "refinement study and condition audits; writes report.json and jumps.json"},
      {"mc", "Monte Carlo estimates; writes mc.json"},
      {"report", "merge artifacts into summary.json, running missing stages"},
  };
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--problem", o.problem, "catalog id or inline problem JSON");
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--grid", o.grid, "grid size MxN");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "unsigned 64-bit seed (overrides STOPLINE_SEED)");
    sub->add_option("--refinements", o.refinements, "number of refinement levels for check");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error(STOPLINE_ERR_CONFIG, "UsageError", e.what());
  }
  if (o.config.empty() && o.problem.empty())
    return emit_error(STOPLINE_ERR_CONFIG, "SchemaError", "/problem: pass --problem or --config");
  for (const auto* sub : app.get_subcommands()) return execute(sub->get_name(), o);
  return emit_error(STOPLINE_ERR_CONFIG, "UsageError", "no subcommand");
}
