#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"

using namespace meanerg;
using cli::RunConfig;

namespace {

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "meanerg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return rc;
}

}  // namespace

TEST_CASE("config documents parse and reject schema violations") {
  const io::Json j = io::Json::parse(R"({
    "schema": "meanerg.config/1",
    "model": {"name": "z_infinity", "params": {"N": 16}},
    "scheme": {"kind": "backward", "n_max": 256},
    "diagnostics": ["e-property"],
    "tolerances": {"modulus": 0.2},
    "seed": 3
  })");
  const RunConfig c = cli::parse_config(j);
  CHECK(c.model == "z_infinity");
  CHECK(c.params.at("N") == 16);
  CHECK(c.scheme == "backward");
  CHECK(c.n_max == std::optional<std::size_t>(256));
  CHECK(c.diagnostics == std::optional<std::vector<std::string>>({"e-property"}));
  CHECK(c.tol.modulus == 0.2);
  CHECK(c.tol.plateau == 1e-6);
  CHECK(c.seed == 3);
  CHECK_NOTHROW(cli::validate(c));

  auto bad = j;
  bad["colour"] = "blue";
  CHECK_THROWS_AS(cli::parse_config(bad), cli::ConfigError);
  bad = j;
  bad["schema"] = "meanerg.config/2";
  CHECK_THROWS_AS(cli::parse_config(bad), cli::ConfigError);
  bad = j;
  bad["tolerances"]["plateau"] = "small";
  CHECK_THROWS_AS(cli::parse_config(bad), cli::ConfigError);

  RunConfig v = c;
  v.tol.invariant = 0.0;
  CHECK_THROWS_AS(cli::validate(v), cli::ConfigError);
  v = c;
  v.scheme = "borel";
  CHECK_THROWS_AS(cli::validate(v), cli::ConfigError);
  v = c;
  v.scheme = "abel";
  CHECK_THROWS_AS(cli::validate(v), cli::ConfigError);
  v = c;
  v.diagnostics = std::vector<std::string>{"nonsense"};
  CHECK_THROWS_AS(cli::validate(v), cli::ConfigError);
}

TEST_CASE("config hash ignores the output directory and tracks everything else") {
  RunConfig a;
  RunConfig b = a;
  b.out = "/somewhere/else";
  CHECK(cli::config_hash(a) == cli::config_hash(b));
  CHECK(cli::config_hash(a).rfind("sha256:", 0) == 0);
  CHECK(cli::config_hash(a).size() == 7 + 64);
  b.seed = a.seed + 1;
  CHECK(cli::config_hash(a) != cli::config_hash(b));
  CHECK(cli::parse_config(cli::to_json(a)).model == a.model);
}

TEST_CASE("flags override the config file") {
  const auto dir = std::filesystem::temp_directory_path() / "meanerg_cli_test";
  std::filesystem::create_directories(dir);
  const auto cfg = (dir / "cfg.json").string();
  io::write_text_file(cfg, R"({"model": "irreducible3", "diagnostics": ["scheme"], "seed": 5})");

  std::string text;
  REQUIRE(run({"diagnose", "--config", cfg, "--model", "swap2", "--n-max", "64", "--check", "projection"}, &text) == 0);
  const auto report = io::Json::parse(text);
  CHECK(report["model"]["name"] == "swap2");
  CHECK(report["config"]["seed"] == 5);
  CHECK(report["config"]["diagnostics"] == io::Json::array({"projection"}));
  CHECK(report["scheme"]["grid"] == io::Json::array({1, 2, 4, 8, 16, 32, 64}));
  CHECK(report["diagnostics"]["projection"]["status"] == "pass");
  CHECK(report["status"] == "certified");
  std::filesystem::remove_all(dir);
}

TEST_CASE("exit codes follow the contract") {
  CHECK(run({"list-models"}) == cli::kOk);
  CHECK(run({"diagnose", "--model", "swap2"}) == cli::kOk);
  CHECK(run({"diagnose", "--model", "shift_z", "--check", "projection"}) == cli::kCertificationFailure);
  CHECK(run({"diagnose", "--model", "shift_z", "--check", "projection", "--allow-inconclusive", "projection"}) ==
        cli::kOk);
  CHECK(run({"diagnose", "--model", "swap2", "--scheme", "backward"}) == cli::kConfigError);
  CHECK(run({"diagnose", "--model", "swap2", "--param", "N=3"}) == cli::kConfigError);
  CHECK(run({"diagnose", "--model", "swap2", "--param", "N"}) == cli::kConfigError);
  CHECK(run({"diagnose", "--model", "rate2", "--n-max", "8", "--t-grid", "1,2"}) == cli::kConfigError);
  CHECK(run({"export-plotdata", "--model", "swap2"}) == cli::kConfigError);
  CHECK(run({"export-plotdata", "--model", "swap2", "--check", "projection"}) == cli::kConfigError);
  CHECK(run({}) == cli::kConfigError);
}

TEST_CASE("time scheme on the rate model reports time averages") {
  std::string text;
  REQUIRE(run({"diagnose", "--model", "rate2", "--t-grid", "1,2,4,8,16,32,64,128,256,512,1024", "--check",
               "scheme,projection"},
              &text) == 0);
  const auto report = io::Json::parse(text);
  CHECK(report["scheme"]["kind"] == "time");
  CHECK(report["diagnostics"]["scheme"]["status"] == "pass");
}
