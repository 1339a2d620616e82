#include "doctest.h"

#include "json.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(STOPLINE_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh(const std::string& name) {
  auto d = fs::temp_directory_path() / ("stopline_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("exit codes and error JSON") {
  const auto none = run("solve");
  CHECK(none.code == 2);
  CHECK(json::parse(none.out)["error"]["kind"] == "SchemaError");
  const auto unknown = run("solve --problem no_such_problem --out " + fresh("unknown").string());
  CHECK(unknown.code == 2);
  CHECK(json::parse(unknown.out)["error"]["kind"] == "UnknownId");
  CHECK(run("solve --problem american_put --grid 4x100 --out " + fresh("small").string()).code == 2);
  CHECK(run("solve --problem american_put --grid abc --out " + fresh("abc").string()).code == 2);
  CHECK(run("solve --problem american_put --seed -3 --out " + fresh("seed").string()).code == 2);
  CHECK(run("solve --config /nonexistent/config.json").code == 2);
  CHECK(run("frobnicate").code == 2);

  const auto dir = fresh("diverge");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"problem": "american_put", "grid": {"M": 64, "N": 64}, "scheme": {"max_iter": 1}})";
  const auto div = run("solve --config " + (dir / "c.json").string() + " --out " + dir.string());
  CHECK(div.code == 3);
  CHECK(json::parse(div.out)["error"]["kind"] == "PsorDiverged");
  fs::remove_all(dir);
}

TEST_CASE("solve writes the artifacts and is deterministic") {
  const auto a = fresh("det_a");
  const auto b = fresh("det_b");
  const auto ra = run("solve --problem american_put --grid 120x60 --out " + a.string());
  REQUIRE(ra.code == 0);
  const json done = json::parse(ra.out);
  CHECK(done["command"] == "solve");
  CHECK(done["config"]["grid"]["N"] == 60);
  const auto rb = run("solve --problem american_put --grid 120x60 --out " + b.string());
  REQUIRE(rb.code == 0);
  for (const char* f : {"boundary.csv", "value.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  std::istringstream rows(slurp(a / "boundary.csv"));
  int lines = 0;
  for (std::string l; std::getline(rows, l);) ++lines;
  CHECK(lines == 61);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("seed precedence: flag over environment over config") {
  const auto dir = fresh("seed_prec");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"problem": "american_put", "grid": {"M": 32, "N": 32}, "seed": 7})";
  const std::string base = "solve --config " + (dir / "c.json").string() + " --out " + dir.string();
  CHECK(json::parse(run(base).out)["seed"] == 7);
  CHECK(json::parse(run(base, "STOPLINE_SEED=11").out)["seed"] == 11);
  CHECK(json::parse(run(base + " --seed 13", "STOPLINE_SEED=11").out)["seed"] == 13);
  fs::remove_all(dir);
}

TEST_CASE("inline problem JSON on the command line") {
  const auto dir = fresh("inline");
  const auto r = run(R"J(solve --problem '{"gain": "pos(1 - x)", "domain": [0.2, 3], "mu": "0.05*x", "sigma": "0.2*x", "discount": "0.05"}' --grid 64x32 --out )J" +
                     dir.string());
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["config"]["problem"]["id"] == "custom");
  CHECK(fs::exists(dir / "boundary.csv"));
  fs::remove_all(dir);
}

TEST_CASE("report runs the whole pipeline") {
  const auto dir = fresh("report");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"problem": "american_put", "grid": {"M": 64, "N": 64},
    "audits": {"c4_paths": 200, "c3_samples": 2000}, "mc": {"paths": 1000, "sup": {"paths": 2000}}})";
  const auto r = run("report --config " + (dir / "c.json").string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["verdicts"].size() >= 1);
  CHECK(summary.contains("mc"));
  fs::remove_all(dir);
}
