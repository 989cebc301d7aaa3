#pragma once

// Grid verifier for the a priori bound behind the C0 estimate: under
//
//   0 <= mu_i <= C0,   c - sum_{j != k} mu_j >= delta0,
//   lambda_k >= 1 - delta,   tau >= -delta,   delta = delta0 / (4c + 4),
//   sum_k mu_k / lambda_k + f(lambda) = c + tau,
//
// both |tau| and every lambda_k stay below some finite K. No closed form for
// K is available, so candidates are checked by search.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tjflow {

/// Decaying source term f(lambda); must tend to 0 as any lambda_j -> infinity.
using DecayTerm = std::function<double(std::span<const double>)>;

struct KeyLemmaHypotheses {
  int n = 2;
  double c = 1.0;
  double delta0 = 0.5;
  double C0 = 1.0;
  /// Coefficient of the default decay term beta / prod(lambda).
  double beta = 0.0;
  /// Replaces beta / prod(lambda) when set. Non-monotone terms force the
  /// exhaustive search.
  DecayTerm f;
  /// false drops the cone condition on mu (used to inject a violation).
  bool enforce_cone = true;

  double delta() const noexcept { return delta0 / (4.0 * c + 4.0); }
  double decay(std::span<const double> lambda) const;
};

struct KeyLemmaWitness {
  enum class Kind { TauExceeds, LambdaExceeds };
  Kind kind;
  std::vector<double> mu;
  std::vector<double> lambda;
  double tau;

  std::string describe() const;
};

struct KeyLemmaReport {
  bool passed = false;
  double K = 0.0;
  int resolution = 0;
  double delta = 0.0;
  double lambda_search_max = 0.0;
  std::size_t points_examined = 0;
  /// delta0 >= 1 lies outside the range the bound is stated for.
  bool outside_stated_hypotheses = false;
  std::optional<KeyLemmaWitness> counterexample;
};

/// max(c + n C0/delta0 * (4c+4)/delta0, 2c).
double default_key_bound(const KeyLemmaHypotheses& h) noexcept;

/// Searches mu on a uniform grid (resolution points per axis) and lambda on a
/// log grid over [1 - delta, 10 K]. With the default decay term the left-hand
/// side is non-increasing in every lambda_k, so each grid line in lambda is
/// admissible on a prefix and only its extreme points need evaluating; the
/// verdict equals that of full enumeration. Custom f falls back to
/// key_c0_verify_exhaustive.
KeyLemmaReport key_c0_verify(const KeyLemmaHypotheses& h, double K_candidate,
                             int resolution);

/// Enumerates the full product grid (resolution^(2n) points).
KeyLemmaReport key_c0_verify_exhaustive(const KeyLemmaHypotheses& h, double K_candidate,
                                        int resolution);

struct BoundSearch {
  std::optional<double> K;  ///< first passing candidate, if any
  KeyLemmaReport last;      ///< report for K, or for the final failing candidate
  int attempts = 0;
};

/// Starts at default_key_bound and doubles until a candidate passes. Running
/// out of doublings is the numerical signature of an unbounded lambda.
BoundSearch find_passing_bound(const KeyLemmaHypotheses& h, int resolution,
                               int max_doublings = 24);

}  // namespace tjflow
