#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = TJFLOW_CLI;
const fs::path kConfigs = TJFLOW_CONFIGS;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tjflow_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.yaml";
  std::ofstream(p) << text;
  return p;
}

const char* kSmall = R"(
geometry:
  n: 2
  N: 32
  theta0: [[0.5, 0.0], [0.0, 0.5]]
  psi:
    - {kind: product, amplitude: 0.04, k: [1, 1]}
  beta: 0.5
initial:
  - {kind: plane, amplitude: 0.01, k: [1, 0]}
flow:
  epsilon_schedule: [0.05, 0.0]
  tol_converge: 1.0e-8
output:
  record_every: 25
seed: 9
)";

}  // namespace

TEST_CASE("check-cone exit codes") {
  const fs::path out = scratch("cone");
  CHECK(run("check-cone --config " + (kConfigs / "smooth.yaml").string() + " --out " +
            (out / "a").string()) == 0);
  const auto a = nlohmann::json::parse(slurp(out / "a" / "cone.json"));
  CHECK(a["subsolution_margin"].get<double>() > 0.4);

  CHECK(run("check-cone --config " + (kConfigs / "constant.yaml").string() + " --out " +
            (out / "b").string()) == 0);
  const auto b = nlohmann::json::parse(slurp(out / "b" / "cone.json"));
  CHECK(b["subsolution_margin"].get<double>() == doctest::Approx(0.5));

  CHECK(run("check-cone --config " + (kConfigs / "failing.yaml").string() + " --out " +
            (out / "c").string()) == 2);
  CHECK(run("check-cone --config " + (kConfigs / "zero-class.yaml").string() + " --out " +
            (out / "d").string()) == 0);
  const auto d = nlohmann::json::parse(slurp(out / "d" / "cone.json"));
  CHECK_FALSE(d["warnings"].empty());
}

TEST_CASE("bad invocations are validation failures") {
  CHECK(run("check-cone --config /nonexistent.yaml") == 2);
  CHECK(run("run-flow") == 2);
  CHECK(run("frobnicate") == 2);
  const fs::path out = scratch("bad");
  const auto cfg = write_config(out, "geometry: {n: 2, N: 16, theta0: [[1,0],[0,1]], x: 1}\n");
  CHECK(run("run-flow --config " + cfg.string() + " --out " + out.string()) == 2);
  CHECK(run("acceptance --only 13 --out " + out.string()) == 2);
}

TEST_CASE("solve-elliptic") {
  const fs::path out = scratch("ell");
  CHECK(run("solve-elliptic --config " + (kConfigs / "degenerate-beta0.yaml").string() +
            " --out " + (out / "deg").string()) == 3);
  const auto cfg = write_config(out, kSmall);
  CHECK(run("solve-elliptic --config " + cfg.string() + " --out " + (out / "s").string() +
            " --parallel 2") == 0);
  const auto s = nlohmann::json::parse(slurp(out / "s" / "summary.json"));
  CHECK(s["runs"][0]["final_residual"].get<double>() < 1e-10);
  CHECK(s["agree"] == true);
  CHECK(fs::exists(out / "s" / "solution.bin"));
  CHECK(fs::exists(out / "s" / "solution.json"));
}

TEST_CASE("run-flow outputs") {
  const fs::path out = scratch("flow");
  CHECK(run("run-flow --config " + (kConfigs / "constant.yaml").string() + " --out " +
            (out / "const").string()) == 0);
  std::istringstream lines(slurp(out / "const" / "diagnostics.csv"));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 2);  // header plus one row

  const auto cfg = write_config(out, kSmall);
  CHECK(run("run-flow --config " + cfg.string() + " --out " + (out / "a").string()) == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "a" / "summary.json"));
  const std::string hash = summary["config_hash"];
  std::istringstream csv(slurp(out / "a" / "diagnostics.csv"));
  std::getline(csv, line);
  CHECK(line.rfind("t,dt,sup_abs_dphi,min_eig_margin,osc_phi,J_twisted,I_aubin,J_aubin,entropy,"
                   "weighted_c2",
                   0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.substr(line.size() - hash.size()) == hash);
  }
  CHECK(rows > 2);
  CHECK(fs::exists(out / "a" / "limit_eps0.bin"));
  CHECK(fs::exists(out / "a" / "limit_eps1.json"));

  // budget too small to converge
  std::string text = kSmall;
  text.replace(text.find("tol_converge: 1.0e-8"), 20, "tol_converge: 1.0e-8\n  max_steps: 5");
  const auto cfg2 = out / "tight.yaml";
  std::ofstream(cfg2) << text;
  CHECK(run("run-flow --config " + cfg2.string() + " --out " + (out / "t").string()) == 4);
  CHECK(fs::exists(out / "t" / "summary.json"));
}

TEST_CASE("identical config and seed give identical bytes") {
  const fs::path out = scratch("det");
  const auto cfg = write_config(out, kSmall);
  REQUIRE(run("run-flow --config " + cfg.string() + " --out " + (out / "a").string()) == 0);
  REQUIRE(run("run-flow --config " + cfg.string() + " --out " + (out / "b").string()) == 0);
  for (const char* f : {"diagnostics.csv", "summary.json", "limit_eps0.bin", "limit_eps1.bin",
                        "limit_eps1.json"}) {
    CHECK_MESSAGE(slurp(out / "a" / f) == slurp(out / "b" / f), f);
  }
  REQUIRE(run("run-flow --config " + cfg.string() + " --out " + (out / "c").string() +
              " --seed 10") == 0);
  const auto a = nlohmann::json::parse(slurp(out / "a" / "summary.json"));
  const auto c = nlohmann::json::parse(slurp(out / "c" / "summary.json"));
  CHECK(a["config_hash"] != c["config_hash"]);
}

TEST_CASE("acceptance subset and tampered tolerance") {
  const fs::path out = scratch("acc");
  CHECK(run("acceptance --only 1,7 --out " + (out / "ok").string()) == 0);
  const auto ok = nlohmann::json::parse(slurp(out / "ok" / "acceptance.json"));
  CHECK(ok["criteria"].size() == 2);
  CHECK(ok["all_passed"] == true);
  const auto cfg = write_config(out, "geometry: {n: 2, N: 16, theta0: [[1,0],[0,1]]}\n"
                                     "acceptance: {gradient: 1.0e-12}\n");
  CHECK(run("acceptance --only 8 --config " + cfg.string() + " --out " + (out / "bad").string()) ==
        4);
}
