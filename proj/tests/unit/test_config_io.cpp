#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tjflow/config.hpp"
#include "tjflow/errors.hpp"
#include "tjflow/io.hpp"
#include "tjflow/random.hpp"

using namespace tjflow;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"(
geometry:
  n: 2
  N: 16
  theta0: [[0.5, 0.0], [0.0, 0.5]]
  psi:
    - {kind: product, amplitude: 0.04, k: [1, 1]}
  beta: 0.5
flow:
  epsilon_schedule: [0.1, 0.0]
seed: 3
)";

std::string message_of(const std::string& text) {
  try {
    ExperimentConfig::parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tjflow_test_" + name);
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

}  // namespace

TEST_CASE("parse a minimal config") {
  const auto c = ExperimentConfig::parse(kBase);
  CHECK(c.geometry.N == 16);
  CHECK(c.geometry.psi.size() == 1);
  CHECK(c.geometry.psi[0].kind == CosineMode::Kind::Product);
  CHECK(c.flow.epsilon_schedule.size() == 2);
  CHECK(c.seed == 3);
  const auto s = c.setup();
  CHECK(s.c_beta == doctest::Approx(1.5));
  CHECK(c.initial_potential().sup() == 0.0);
}

TEST_CASE("parse errors name the offending key") {
  CHECK(message_of(std::string(kBase) + "bogus: 1\n").find("bogus") != std::string::npos);
  CHECK(message_of("geometry: {n: 2, N: 16, theta0: [[1,0],[0,1]], colour: red}\n")
            .find("colour") != std::string::npos);
  CHECK(message_of("geometry: {n: 2, N: 15, theta0: [[1,0],[0,1]]}\n").find("geometry.N") !=
        std::string::npos);
  CHECK(message_of("geometry: {n: 2, N: 16}\n").find("theta0") != std::string::npos);
  CHECK(message_of("geometry: {n: 2, N: 16, theta0: [[1,2],[0,1]]}\n").find("symmetric") !=
        std::string::npos);
  CHECK(message_of(std::string(kBase) + "solver: {gauge: max}\n").find("gauge") !=
        std::string::npos);
  CHECK_FALSE(message_of("geometry: {n: 2, N: 16, theta0: [[1,0],[0,1]]}\nflow: "
                         "{epsilon_schedule: [0.0, 0.1]}\n")
                  .empty());
  CHECK_FALSE(message_of("geometry: [1, 2\n").empty());
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/x.yaml"), ValidationError);
}

TEST_CASE("validation failures surface before any computation") {
  const auto c = ExperimentConfig::parse(
      "geometry: {n: 2, N: 16, theta0: [[1,0],[0,-1]]}\n");
  CHECK_THROWS_AS(c.setup(), ValidationError);
}

TEST_CASE("degeneracy with points and hyperplanes") {
  const auto c = ExperimentConfig::parse(R"(
geometry:
  n: 2
  N: 16
  theta0: [[1, 0], [0, 1]]
  degeneracy:
    hyperplanes: [{axis: 1, value: 0.25}]
    points: [[0.5, 0.5]]
    gamma: 1
)");
  REQUIRE(c.geometry.degeneracy.has_value());
  CHECK(c.geometry.degeneracy->locus.hyperplanes.size() == 1);
  REQUIRE(c.geometry.degeneracy->locus.points.size() == 1);
  CHECK(c.geometry.degeneracy->locus.points[0][1] == 0.5);
}

TEST_CASE("config hash") {
  const auto a = ExperimentConfig::parse(kBase);
  const auto b = ExperimentConfig::parse(kBase);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash_hex().size() == 16);
  auto c = ExperimentConfig::parse(kBase);
  c.seed = 4;
  CHECK(c.hash() != a.hash());
  std::string other = kBase;
  other.replace(other.find("0.04"), 4, "0.03");
  CHECK(ExperimentConfig::parse(other).hash() != a.hash());
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("format_double round trips") {
  Rng rng(81);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), rng.integer(-60, 60));
    const double back = std::stod(format_double(v));
    CHECK(std::memcmp(&v, &back, sizeof v) == 0);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("binary field round trip and sidecar") {
  const fs::path dir = scratch("field");
  Grid g(2, 16);
  Rng rng(82);
  const PotentialField u = random_potential(g, rng, 0.5);
  write_field(dir / "u", u, {{"note", "x"}});
  const PotentialField back = read_potential(dir / "u.bin");
  CHECK(back.grid() == g);
  CHECK(std::memcmp(back.values().data(), u.values().data(), u.size() * sizeof(double)) == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "u.json"));
  CHECK(meta["N"] == 16);
  CHECK(meta["note"] == "x");
  CHECK(fs::file_size(dir / "u.bin") == 8 + 16 + g.size() * 8);
  CHECK(slurp(dir / "u.bin").substr(0, 8) == "TJFIELD1");

  write_field(dir / "h", reduced_hessian(u));
  CHECK(fs::file_size(dir / "h.bin") == 8 + 16 + 3 * g.size() * 8);
  CHECK_THROWS_AS(read_potential(dir / "h.bin"), ValidationError);
  std::ofstream(dir / "junk.bin") << "not a field";
  CHECK_THROWS_AS(read_potential(dir / "junk.bin"), ValidationError);
}

TEST_CASE("diagnostics csv layout") {
  const fs::path dir = scratch("csv");
  {
    DiagnosticsCsv csv(dir / "d.csv", "00000000deadbeef");
    DiagnosticsRow row;
    row.t = 0.25;
    row.dt = 1e-4;
    row.entropy = 3.0;
    csv.write(row, 0.1);
    csv.write(row, 0.0);
    CHECK(csv.rows() == 2);
  }
  std::istringstream in(slurp(dir / "d.csv"));
  std::string header, line;
  std::getline(in, header);
  CHECK(header ==
        "t,dt,sup_abs_dphi,min_eig_margin,osc_phi,J_twisted,I_aubin,J_aubin,entropy,weighted_c2,"
        "epsilon,config_hash");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind("0.25,1e-04,", 0) == 0);
    CHECK(line.substr(line.size() - 17) == ",00000000deadbeef");
    CHECK(std::count(line.begin(), line.end(), ',') == 11);
  }
  CHECK(rows == 2);
}
