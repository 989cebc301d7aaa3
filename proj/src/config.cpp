#include "tjflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tjflow/errors.hpp"
#include "tjflow/io.hpp"

namespace tjflow {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("config: " + where + ": " + what);
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) fail(where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <class T>
T get(const YAML::Node& node, const std::string& key, const std::string& where, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    fail(where + "." + key, "wrong type");
  }
}

CosineMode parse_mode(const YAML::Node& node, const std::string& where) {
  check_keys(node, {"kind", "amplitude", "k", "phase"}, where);
  CosineMode m;
  const auto kind = get<std::string>(node, "kind", where, "plane");
  if (kind == "plane") {
    m.kind = CosineMode::Kind::Plane;
  } else if (kind == "product") {
    m.kind = CosineMode::Kind::Product;
  } else {
    fail(where + ".kind", "expected plane or product, got '" + kind + "'");
  }
  m.amplitude = get<double>(node, "amplitude", where, 0.0);
  m.phase = get<double>(node, "phase", where, 0.0);
  if (!node["k"]) fail(where, "missing k");
  m.k = get<std::vector<int>>(node, "k", where, {});
  return m;
}

std::vector<CosineMode> parse_modes(const YAML::Node& node, const std::string& where) {
  std::vector<CosineMode> out;
  if (!node) return out;
  if (!node.IsSequence()) fail(where, "expected a list of modes");
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(parse_mode(node[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void check_modes(const std::vector<CosineMode>& modes, int n, const std::string& where) {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (static_cast<int>(modes[i].k.size()) != n) {
      fail(where + "[" + std::to_string(i) + "].k", "needs " + std::to_string(n) + " entries");
    }
  }
}

Eigen::MatrixXd parse_matrix(const YAML::Node& node, int n, const std::string& where) {
  if (!node.IsSequence() || static_cast<int>(node.size()) != n) {
    fail(where, "expected " + std::to_string(n) + " rows");
  }
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    const YAML::Node row = node[static_cast<std::size_t>(i)];
    if (!row.IsSequence() || static_cast<int>(row.size()) != n) {
      fail(where, "row " + std::to_string(i) + " needs " + std::to_string(n) + " entries");
    }
    for (int j = 0; j < n; ++j) {
      try {
        m(i, j) = row[static_cast<std::size_t>(j)].as<double>();
      } catch (const YAML::Exception&) {
        fail(where, "non-numeric entry");
      }
    }
  }
  if (!m.isApprox(m.transpose(), 0.0)) fail(where, "matrix is not symmetric");
  return m;
}

Degeneracy parse_degeneracy(const YAML::Node& node, const std::string& where) {
  check_keys(node, {"hyperplanes", "points", "gamma", "C0"}, where);
  Degeneracy d;
  d.gamma = get<double>(node, "gamma", where, 1.0);
  d.C0 = get<double>(node, "C0", where, 0.0);
  if (const auto hs = node["hyperplanes"]) {
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::string w = where + ".hyperplanes[" + std::to_string(i) + "]";
      check_keys(hs[i], {"axis", "value"}, w);
      d.locus.hyperplanes.push_back({get<int>(hs[i], "axis", w, 0), get<double>(hs[i], "value", w, 0.0)});
    }
  }
  if (const auto ps = node["points"]) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      try {
        d.locus.points.push_back(ps[i].as<std::vector<double>>());
      } catch (const YAML::Exception&) {
        fail(where + ".points[" + std::to_string(i) + "]", "expected a coordinate list");
      }
    }
  }
  if (d.locus.empty()) fail(where, "locus has no components");
  if (!(d.gamma > 0.0)) fail(where + ".gamma", "must be positive");
  return d;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail("yaml", e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, {"geometry", "initial", "flow", "solver", "output", "acceptance", "seed"},
             "root");
  ExperimentConfig c;

  const YAML::Node g = root["geometry"];
  if (!g) fail("geometry", "section is required");
  check_keys(g, {"n", "N", "theta0", "psi", "degeneracy", "example", "beta", "epsilon0",
                 "subsolution"},
             "geometry");
  auto& geo = c.geometry;
  geo.n = get<int>(g, "n", "geometry", 2);
  geo.N = get<int>(g, "N", "geometry", 64);
  if (geo.n != 2 && geo.n != 3) fail("geometry.n", "must be 2 or 3");
  if (geo.N < 8 || geo.N % 2 != 0) fail("geometry.N", "must be even and >= 8");
  geo.beta = get<double>(g, "beta", "geometry", 0.0);
  geo.epsilon0 = get<double>(g, "epsilon0", "geometry", 0.0);
  if (const auto ex = g["example"]) {
    check_keys(ex, {"name", "t1", "t2"}, "geometry.example");
    const auto name = get<std::string>(ex, "name", "geometry.example", "");
    if (name != "degenerate") fail("geometry.example.name", "only 'degenerate' is known");
    if (g["theta0"] || g["psi"] || g["degeneracy"]) {
      fail("geometry", "example excludes theta0, psi and degeneracy");
    }
    geo.example = DegenerateExampleSpec{get<double>(ex, "t1", "geometry.example", 1.0),
                                        get<double>(ex, "t2", "geometry.example", 1.0)};
  } else {
    if (!g["theta0"]) fail("geometry.theta0", "is required");
    geo.theta0 = parse_matrix(g["theta0"], geo.n, "geometry.theta0");
    geo.psi = parse_modes(g["psi"], "geometry.psi");
    check_modes(geo.psi, geo.n, "geometry.psi");
    if (const auto d = g["degeneracy"]) geo.degeneracy = parse_degeneracy(d, "geometry.degeneracy");
  }
  if (const auto s = g["subsolution"]) {
    geo.subsolution = parse_modes(s, "geometry.subsolution");
    check_modes(*geo.subsolution, geo.n, "geometry.subsolution");
  }

  c.initial = parse_modes(root["initial"], "initial");
  check_modes(c.initial, geo.n, "initial");

  if (const auto f = root["flow"]) {
    check_keys(f, {"dt_initial", "dt_max", "safety", "tol_converge", "max_steps",
                   "epsilon_schedule", "record_every", "dt_floor", "weighted_c2_slack",
                   "abort_on_failure"},
               "flow");
    auto& fc = c.flow;
    fc.dt_initial = get<double>(f, "dt_initial", "flow", fc.dt_initial);
    fc.dt_max = get<double>(f, "dt_max", "flow", fc.dt_max);
    fc.safety = get<double>(f, "safety", "flow", fc.safety);
    fc.tol_converge = get<double>(f, "tol_converge", "flow", fc.tol_converge);
    fc.max_steps = get<long>(f, "max_steps", "flow", fc.max_steps);
    fc.epsilon_schedule = get<std::vector<double>>(f, "epsilon_schedule", "flow", fc.epsilon_schedule);
    fc.record_every = get<int>(f, "record_every", "flow", fc.record_every);
    fc.dt_floor = get<double>(f, "dt_floor", "flow", fc.dt_floor);
    fc.weighted_c2_slack = get<double>(f, "weighted_c2_slack", "flow", fc.weighted_c2_slack);
    fc.abort_on_failure = get<bool>(f, "abort_on_failure", "flow", fc.abort_on_failure);
  }

  if (const auto s = root["solver"]) {
    check_keys(s, {"tol", "max_iter", "seeds", "seed_hessian", "epsilon", "gauge",
                   "agreement_tol", "gmres_restart", "gmres_max_iter", "forcing"},
               "solver");
    auto& sc = c.solver;
    sc.newton.tol = get<double>(s, "tol", "solver", sc.newton.tol);
    sc.newton.max_iter = get<int>(s, "max_iter", "solver", sc.newton.max_iter);
    sc.newton.gmres_restart = get<int>(s, "gmres_restart", "solver", sc.newton.gmres_restart);
    sc.newton.gmres_max_iter = get<int>(s, "gmres_max_iter", "solver", sc.newton.gmres_max_iter);
    sc.newton.forcing = get<double>(s, "forcing", "solver", sc.newton.forcing);
    sc.seeds = get<int>(s, "seeds", "solver", sc.seeds);
    sc.seed_hessian = get<double>(s, "seed_hessian", "solver", sc.seed_hessian);
    sc.epsilon = get<double>(s, "epsilon", "solver", sc.epsilon);
    sc.agreement_tol = get<double>(s, "agreement_tol", "solver", sc.agreement_tol);
    const auto gauge = get<std::string>(s, "gauge", "solver", "mean");
    if (gauge == "mean") {
      sc.gauge = Gauge::MeanZero;
    } else if (gauge == "sup") {
      sc.gauge = Gauge::SupZero;
    } else {
      fail("solver.gauge", "expected mean or sup");
    }
    if (sc.seeds < 1) fail("solver.seeds", "must be >= 1");
    if (!(sc.seed_hessian > 0.0 && sc.seed_hessian < 1.0)) {
      fail("solver.seed_hessian", "must lie in (0,1)");
    }
    if (!(sc.epsilon >= 0.0)) fail("solver.epsilon", "must be non-negative");
  }

  if (const auto o = root["output"]) {
    check_keys(o, {"dir", "record_every", "snapshots"}, "output");
    c.output.dir = get<std::string>(o, "dir", "output", c.output.dir.string());
    c.output.snapshots = get<bool>(o, "snapshots", "output", c.output.snapshots);
    if (o["record_every"]) c.flow.record_every = get<int>(o, "record_every", "output", 10);
  }

  if (const auto a = root["acceptance"]) {
    if (!a.IsMap()) fail("acceptance", "expected a mapping");
    for (const auto& kv : a) {
      const auto key = kv.first.as<std::string>();
      try {
        c.acceptance[key] = kv.second.as<double>();
      } catch (const YAML::Exception&) {
        fail("acceptance." + key, "expected a number");
      }
    }
  }

  c.seed = get<std::uint64_t>(root, "seed", "root", 0);
  try {
    c.flow.validate();
  } catch (const ValidationError& e) {
    fail("flow", e.what());
  }
  if (!(geo.beta >= 0.0)) fail("geometry.beta", "must be non-negative");

  YAML::Emitter em;
  em << root;
  c.canonical = em.c_str();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::uint64_t ExperimentConfig::hash() const noexcept {
  return fnv1a64(canonical + "\nseed=" + std::to_string(seed));
}

std::string ExperimentConfig::hash_hex() const { return hex64(hash()); }

Grid ExperimentConfig::grid() const { return Grid(geometry.n, geometry.N); }

ThetaSpec ExperimentConfig::theta_spec() const {
  const Grid g = grid();
  if (geometry.example) return degenerate_theta_example(g, geometry.example->t1, geometry.example->t2);
  return ThetaSpec{geometry.theta0, sample_modes(g, geometry.psi), geometry.degeneracy};
}

GeometrySetup ExperimentConfig::setup() const {
  std::optional<PotentialField> sub;
  if (geometry.subsolution) sub = sample_modes(grid(), *geometry.subsolution);
  return GeometrySetup::make(theta_spec(), geometry.beta, geometry.epsilon0, std::move(sub));
}

PotentialField ExperimentConfig::initial_potential() const {
  return sample_modes(grid(), initial);
}

}  // namespace tjflow
