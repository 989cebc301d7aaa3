#pragma once

// YAML experiment configuration.
//
//   geometry: {n, N, theta0, psi: [modes], degeneracy: {...}, example: {...},
//              beta, epsilon0, subsolution: [modes]}
//   initial:  [modes]            # phi0, default 0
//   flow:     FlowConfig fields, epsilon_schedule
//   solver:   {tol, max_iter, seeds, seed_hessian, epsilon, gauge, agreement_tol, ...}
//   output:   {dir, record_every, snapshots}
//   acceptance: tolerance overrides
//   seed:     integer
//
// A mode is {kind: plane|product, amplitude, k: [..], phase}.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tjflow/elliptic.hpp"
#include "tjflow/flow.hpp"
#include "tjflow/geometry.hpp"

namespace tjflow {

struct DegenerateExampleSpec {
  double t1 = 1.0;
  double t2 = 1.0;
};

struct GeometryConfig {
  int n = 2;
  int N = 64;
  Eigen::MatrixXd theta0;
  std::vector<CosineMode> psi;
  std::optional<Degeneracy> degeneracy;
  std::optional<DegenerateExampleSpec> example;
  double beta = 0.0;
  double epsilon0 = 0.0;
  std::optional<std::vector<CosineMode>> subsolution;
};

struct SolverConfig {
  NewtonOptions newton;
  int seeds = 1;               ///< number of Newton seeds (first is the initial potential)
  double seed_hessian = 0.3;   ///< Hessian bound of random seeds
  double epsilon = 0.0;
  Gauge gauge = Gauge::MeanZero;
  double agreement_tol = 1e-6;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  bool snapshots = true;
};

struct ExperimentConfig {
  GeometryConfig geometry;
  std::vector<CosineMode> initial;
  FlowConfig flow;
  SolverConfig solver;
  OutputConfig output;
  std::map<std::string, double> acceptance;
  std::uint64_t seed = 0;
  /// Canonical text of the parsed document; hashed together with the seed.
  std::string canonical;

  /// Throws ValidationError with the offending key on malformed input.
  static ExperimentConfig parse(const std::string& yaml_text);
  static ExperimentConfig load(const std::filesystem::path& path);

  std::uint64_t hash() const noexcept;
  std::string hash_hex() const;

  Grid grid() const;
  ThetaSpec theta_spec() const;
  /// Validated setup (ValidationError on failure).
  GeometrySetup setup() const;
  PotentialField initial_potential() const;
};

}  // namespace tjflow
