#pragma once

// End-to-end acceptance suite, shared by the acceptance test binary and the
// CLI. Each criterion yields one pass/fail record.

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace tjflow {

struct AcceptanceTolerances {
  double stationary = 1e-14;
  double subsolution_margin = 0.4;
  double converge_speed = 1e-8;
  double converge_steps = 2e5;
  double converge_residual = 1e-6;
  double monotone = 1e-10;
  double energy_identity = 1e-3;
  double derivative_floor = 1e-8;
  double conservation = 5e-6;
  double max_principle = 1e-8;
  double trace_margin = 1e-8;
  double uniqueness = 1e-6;
  double cohomology = 1e-12;
  double gradient = 1e-4;
  double degenerate_oscillation = 0.05;
  double degenerate_residual = 1e-5;
  double degenerate_distance = 0.1;
  double degenerate_c2 = 0.10;
  double degenerate_max_steps = 1e6;
  double key_resolution = 200;
  double key_triples = 200;
  double sandwich = 1e-9;
  double sandwich_samples = 100;
  double refinement = 1e-6;

  /// Overrides by field name; throws ValidationError on an unknown name.
  void apply(const std::map<std::string, double>& overrides);
  nlohmann::json to_json() const;
};

struct AcceptanceOptions {
  AcceptanceTolerances tol;
  std::uint64_t seed = 20261016;
  int parallel = 1;
  int N = 64;
  std::set<int> only;  ///< empty runs every criterion
  std::function<void(const struct CriterionResult&)> on_result;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json metrics = nlohmann::json::object();
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// "PASS  3 monotone-energy  <detail>".
std::string format_result(const CriterionResult& r);

}  // namespace tjflow
