#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rflight/errors.hpp"
#include "rflight/experiment.hpp"

using namespace rflight;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text, ExperimentKind kind = ExperimentKind::Ladder) {
  try {
    parse_config_text(text, kind);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(RFLIGHT_TEST_DIR) / "config_scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RFLIGHT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("seed is mandatory") {
  CHECK(error_of("{\"n\": 100}").find("seed") != std::string::npos);
  CHECK(error_of("{\"seed\": -1}").find("seed") != std::string::npos);
  CHECK(error_of("{\"seed\": 5}").empty());
}

TEST_CASE("unknown keys are rejected with their location") {
  const std::string e = error_of("{\n  \"seed\": 1,\n  \"chain\": {\"stepz\": 3}\n}");
  CHECK(e.find("chain.stepz") != std::string::npos);
  CHECK(e.find("line 3") != std::string::npos);
  CHECK(!error_of("{\"seed\": 1, \"extra\": true}").empty());
  CHECK(!error_of("{\"seed\": 1, \"scenario\": {\"params\": {\"q\": 1}}}").empty());
}

TEST_CASE("type and value errors") {
  CHECK(error_of("{\"seed\": 1, \"n\": \"big\"}").find("'n'") != std::string::npos);
  CHECK(!error_of("{\"seed\": 1, \"n\": 0}").empty());
  CHECK(!error_of("{\"seed\": 1, \"band\": [0.7, 0.3]}").empty());
  CHECK(!error_of("{\"seed\": 1, \"ladder\": {\"n_values\": [100, 10]}}").empty());
  CHECK(!error_of("{\"seed\": 1, \"conventions\": {\"radial\": \"other\"}}").empty());
  CHECK(!error_of("{\"seed\": 1, \"scenario\": {\"name\": \"moon\"}}").empty());
  CHECK(!error_of("{\"seed\": 1, \"diffusion\": {\"process\": \"X\"}}").empty());
  CHECK(error_of("{\"seed\": 1,}").find("line 1") != std::string::npos);
}

TEST_CASE("experiment key must match the subcommand") {
  CHECK(error_of("{\"seed\": 1, \"experiment\": \"ladder\"}").empty());
  CHECK(!error_of("{\"seed\": 1, \"experiment\": \"verify\"}").empty());
}

TEST_CASE("comments are allowed") {
  const auto c = parse_config_text("// header\n{ \"seed\": 3, /* inline */ \"n\": 256 }\n",
                                   ExperimentKind::SimulateChain);
  CHECK(c.seed == 3);
  CHECK(c.n == 256.0);
}

TEST_CASE("resolved configuration round-trips") {
  const auto c = parse_config_text(
      "{\"seed\": 9, \"ladder\": {\"n_values\": [1e2, 1e4, 1e6]}, \"band\": [0.3, 0.7],"
      " \"diffusion\": {\"horizon\": null, \"snapshot_time\": 0.1}}",
      ExperimentKind::Ladder);
  CHECK(c.ladder.n_values == std::vector<double>{1e2, 1e4, 1e6});
  CHECK(c.diffusion.horizon == kInfinity);
  const std::string dump = resolved_json(c).dump();
  const auto again = parse_config_text(dump, ExperimentKind::Ladder);
  CHECK(again.ladder.n_values == c.ladder.n_values);
  CHECK(again.diffusion.horizon == kInfinity);
  CHECK(*again.diffusion.snapshot_time == 0.1);
  CHECK(resolved_json(again).dump() == dump);
}

TEST_CASE("heuristic scenario expansion") {
  const auto c = parse_config_text("{\"seed\": 1}", ExperimentKind::SimulateChain);
  CHECK(c.scenario.name == "heuristic-1.2");
  const ModelConfig m = build_model(c);
  CHECK(m.mass == 2.0);
  CHECK(m.energy == 1.0);
  CHECK(m.U(0.4) == doctest::Approx(0.4));
  CHECK(m.g(0.4) == 1.0);
  CHECK(m.domain.lower == 0.0);
  CHECK(m.domain.upper == doctest::Approx(1.0));
  CHECK(m.dim == 3);
}

TEST_CASE("custom scenario") {
  const auto c = parse_config_text(
      "{\"seed\": 1, \"scenario\": {\"name\": \"custom\", \"potential\": \"r^2\", \"energy\": 4,"
      " \"density\": {\"kind\": \"linear\", \"g0\": 1, \"beta\": 0.5}}}",
      ExperimentKind::ClassifyBoundary);
  const ModelConfig m = build_model(c);
  CHECK(m.domain.upper == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.g(1.0) == doctest::Approx(1.5));
  CHECK(!error_of("{\"seed\": 1, \"scenario\": {\"name\": \"newtonian\", \"potential\": \"r\"}}").empty());
}

TEST_CASE("boundary subcommand on the newtonian scenario") {
  const fs::path dir = scratch("boundary");
  write(dir / "c.json", "{\"seed\": 1, \"scenario\": {\"name\": \"newtonian\"},"
                        " \"boundary\": {\"expect_lower\": \"inaccessible\", \"expect_upper\": \"inaccessible\"}}");
  CHECK(run_cli("classify-boundary --config " + (dir / "c.json").string() + " --output " + (dir / "out").string()) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "boundary.json"));
  CHECK(j["endpoints"][0]["classification"] == "inaccessible");
  CHECK(j["endpoints"][1]["classification"] == "inaccessible");
  CHECK(fs::exists(dir / "out" / "resolved_config.json"));
  const auto s = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(s["all_passed"] == true);

  write(dir / "bad.json", "{\"seed\": 1, \"scenario\": {\"name\": \"newtonian\"},"
                          " \"boundary\": {\"expect_lower\": \"accessible\"}}");
  CHECK(run_cli("classify-boundary --config " + (dir / "bad.json").string() + " --output " + (dir / "out2").string()) == 4);
}

TEST_CASE("ladder subcommand writes the ladder table") {
  const fs::path dir = scratch("ladder");
  write(dir / "c.json", "{\"seed\": 2, \"ladder\": {\"n_values\": [100, 10000], \"samples\": 500}}");
  // Statistical assertions may fail at this sample size; the table must still be written.
  const int code = run_cli("ladder --config " + (dir / "c.json").string() + " --output " + (dir / "out").string());
  CHECK((code == 0 || code == 4));
  const std::string csv = slurp(dir / "out" / "ladder.csv");
  CHECK(csv.rfind("n,component,estimate,se,limit,abs_err\n", 0) == 0);
  CHECK(csv.find("100,drift_x1,") != std::string::npos);
  CHECK(csv.find("10000,cov_t_t,") != std::string::npos);
}

TEST_CASE("simulation subcommands") {
  const fs::path dir = scratch("sim");
  write(dir / "chain.json", "{\"seed\": 3, \"n\": 100, \"chain\": {\"steps\": 50, \"replicas\": 3}}");
  CHECK(run_cli("simulate-chain --config " + (dir / "chain.json").string() + " --output " + (dir / "c").string() + " --workers 2") == 0);
  CHECK(fs::exists(dir / "c" / "chain.jsonl"));
  CHECK(fs::exists(dir / "c" / "replicas.csv"));
  CHECK(run_cli("simulate-trajectory --config " + (dir / "chain.json").string() + " --output " + (dir / "t").string()) == 0);
  CHECK(fs::exists(dir / "t" / "trajectory.csv"));
  write(dir / "diff.json", "{\"seed\": 4, \"band\": [0.3, 0.7], \"diffusion\": {\"process\": \"Gr\","
                           " \"horizon\": null, \"paths\": 300}}");
  CHECK(run_cli("simulate-diffusion --config " + (dir / "diff.json").string() + " --output " + (dir / "d").string()) == 0);
  CHECK(fs::exists(dir / "d" / "exits.csv"));
  CHECK(fs::exists(dir / "d" / "paths.csv"));
}

TEST_CASE("runs are deterministic across worker counts and seeds override") {
  const fs::path dir = scratch("det");
  write(dir / "c.json", "{\"seed\": 5, \"n\": 100, \"chain\": {\"steps\": 40, \"replicas\": 6}}");
  const std::string base = "simulate-chain --config " + (dir / "c.json").string();
  REQUIRE(run_cli(base + " --output " + (dir / "w1").string() + " --workers 1") == 0);
  REQUIRE(run_cli(base + " --output " + (dir / "w3").string() + " --workers 3") == 0);
  REQUIRE(run_cli(base + " --output " + (dir / "s").string() + " --seed-override 6") == 0);
  CHECK(slurp(dir / "w1" / "summary.json") == slurp(dir / "w3" / "summary.json"));
  CHECK(slurp(dir / "w1" / "replicas.csv") == slurp(dir / "w3" / "replicas.csv"));
  CHECK(slurp(dir / "w1" / "replicas.csv") != slurp(dir / "s" / "replicas.csv"));
  const auto r = nlohmann::json::parse(slurp(dir / "s" / "resolved_config.json"));
  CHECK(r["seed"] == 6);
}

TEST_CASE("exit codes for configuration errors") {
  const fs::path dir = scratch("codes");
  write(dir / "unknown.json", "{\"seed\": 1, \"bogus\": 2}");
  write(dir / "noseed.json", "{\"n\": 10}");
  write(dir / "broken.json", "{\"seed\": ");
  CHECK(run_cli("ladder --config " + (dir / "unknown.json").string()) == 2);
  CHECK(run_cli("ladder --config " + (dir / "noseed.json").string()) == 2);
  CHECK(run_cli("ladder --config " + (dir / "broken.json").string()) == 2);
  CHECK(run_cli("ladder --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("ladder") == 2);
  CHECK(run_cli("frobnicate --config x") == 2);
  CHECK(run_cli("--help") == 0);
}
