#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sindex/rng.hpp"

namespace {

struct RunResult {
  int status = -1;
  std::string output;
};

// Runs the CLI binary with the given arguments, capturing stdout + stderr.
RunResult run_cli(const std::string& args) {
  const std::string command = std::string(SINDEX_CLI_PATH) + " " + args + " 2>&1";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  while (std::fgets(buffer, sizeof(buffer), pipe)) {
    result.output += buffer;
  }
  const int raw = pclose(pipe);
  result.status = WEXITSTATUS(raw);
  return result;
}

std::string temp_path(const std::string& name) {
  return std::string("cli_test_") + name;
}

void write_linear_csv(const std::string& path, int n, std::uint64_t seed) {
  sindex::Rng rng(seed);
  std::ofstream out(path);
  out << "x1,x2,x3,y\n";
  for (int i = 0; i < n; ++i) {
    const double x1 = rng.normal();
    const double x2 = rng.normal();
    const double x3 = rng.normal();
    const double y = (x1 + x2 + x3) / std::sqrt(3.0) + rng.normal();
    out << x1 << "," << x2 << "," << x3 << "," << y << "\n";
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fit: happy path emits a unit-norm estimate") {
  const std::string csv = temp_path("fit.csv");
  const std::string out = temp_path("fit.json");
  write_linear_csv(csv, 800, 42);

  const RunResult r = run_cli("fit --data " + csv + " --out " + out + " --seed 7");
  CHECK(r.status == 0);

  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  const std::vector<double> beta = j["beta_hat"];
  double norm = 0.0;
  for (double b : beta) norm += b * b;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(j["std_errors"].size() == 3);

  std::remove(csv.c_str());
  std::remove(out.c_str());
}

TEST_CASE("fit: missing file and bad column count exit with 2") {
  CHECK(run_cli("fit --data does_not_exist.csv").status == 2);

  const std::string csv = temp_path("narrow.csv");
  {
    std::ofstream out(csv);
    out << "x1,y\n1,2\n2,4\n3,6\n4,8\n5,10\n";
  }
  const RunResult r = run_cli("fit --data " + csv);
  CHECK(r.status == 2);
  std::remove(csv.c_str());
}

TEST_CASE("simulate: example config, determinism across runs and threads") {
  const std::string config_path = temp_path("sim_config.json");
  {
    nlohmann::json config;
    config["model"] = {{"link", "identity"}, {"error", "gaussian"}, {"sigma_or_scale", 1.0}};
    config["law"] = {{"kind", "gaussian"}, {"p", 3}};
    config["n_grid"] = {150, 300};
    config["replications"] = 6;
    config["estimators"] = {"ols", "mle"};
    config["seed"] = 97;
    std::ofstream out(config_path);
    out << config.dump(2);
  }

  const std::string out1 = temp_path("sim_a");
  const std::string out2 = temp_path("sim_b");
  const std::string out3 = temp_path("sim_c");

  CHECK(run_cli("simulate --config " + config_path + " --out " + out1 + " --threads 1").status ==
        0);
  CHECK(run_cli("simulate --config " + config_path + " --out " + out2 + " --threads 1").status ==
        0);
  CHECK(run_cli("simulate --config " + config_path + " --out " + out3 + " --threads 4").status ==
        0);

  const std::string csv1 = slurp(out1 + ".csv");
  CHECK(!csv1.empty());
  CHECK(csv1 == slurp(out2 + ".csv"));
  CHECK(csv1 == slurp(out3 + ".csv"));
  CHECK(slurp(out1 + ".json") == slurp(out3 + ".json"));

  for (const auto& base : {out1, out2, out3}) {
    std::remove((base + ".json").c_str());
    std::remove((base + ".csv").c_str());
  }
  std::remove(config_path.c_str());
}

TEST_CASE("simulate: validation failure lists the offending fields") {
  const std::string config_path = temp_path("bad_config.json");
  {
    nlohmann::json config;
    config["model"] = {{"link", "identity"}, {"error", "gaussian"}};
    config["law"] = {{"kind", "gaussian"}, {"p", 3}};
    config["n_grid"] = {200};
    config["replications"] = 1;  // below the minimum
    config["estimators"] = {"ols"};
    std::ofstream out(config_path);
    out << config.dump(2);
  }
  const RunResult r = run_cli("simulate --config " + config_path);
  CHECK(r.status == 2);
  CHECK(r.output.find("replications") != std::string::npos);
  std::remove(config_path.c_str());

  CHECK(run_cli("simulate --config no_such_config.json").status == 2);
}

TEST_CASE("check-lemma1: constant kappa has a small residual, bad kappa exits 2") {
  const std::string out = temp_path("lemma.json");
  const RunResult r = run_cli(
      "check-lemma1 --model sine --error gaussian --sigma 0.5 --law gaussian --p 3 "
      "--kappa constant --nmc 200000 --seed 3 --out " +
      out);
  CHECK(r.status == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["results"].size() == 1);
  CHECK(j["results"][0]["ratio"].get<double>() <= 3.0);
  std::remove(out.c_str());

  const RunResult bad = run_cli("check-lemma1 --kappa nonsense --nmc 10000");
  CHECK(bad.status == 2);
  CHECK(bad.output.find("true_score") != std::string::npos);
}

TEST_CASE("score-diag: grid handling") {
  const std::string out = temp_path("diag.json");
  const RunResult r = run_cli(
      "score-diag --model identity --error gaussian --n-grid 300,900 --n-eval 500 --seed 5 "
      "--out " +
      out);
  CHECK(r.status == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["points"].size() == 2);
  CHECK(j.contains("slope"));
  std::remove(out.c_str());

  const std::string single = temp_path("diag1.json");
  const RunResult r1 = run_cli("score-diag --n-grid 400 --n-eval 400 --seed 5 --out " + single);
  CHECK(r1.status == 0);
  const nlohmann::json j1 = nlohmann::json::parse(slurp(single));
  CHECK(j1["points"].size() == 1);
  CHECK(!j1.contains("slope"));
  std::remove(single.c_str());

  CHECK(run_cli("score-diag --n-grid 900,300").status == 2);
  CHECK(run_cli("score-diag --n-grid nonsense").status == 2);
}
