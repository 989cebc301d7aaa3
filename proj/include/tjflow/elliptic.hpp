#pragma once

// Newton-Krylov solver for
//
//     n omega_u^(n-1) ^ theta + rho omega^n = psi omega_u^n,
//
// written pointwise as psi - tr(G^-1 Theta) - rho / det G = 0 with G = I + H(u).
// The twisted J-equation is psi = c_beta, rho = beta.

#include <optional>
#include <string>
#include <vector>

#include "tjflow/field.hpp"
#include "tjflow/geometry.hpp"
#include "tjflow/j_operator.hpp"

namespace tjflow {

enum class Gauge { MeanZero, SupZero };

class EllipticProblem {
 public:
  /// psi = c (default c_beta of the setup's theta_eps), rho = beta.
  static EllipticProblem twisted(const GeometrySetup& setup, double epsilon = 0.0,
                                 std::optional<double> c = std::nullopt,
                                 Gauge gauge = Gauge::MeanZero);
  static EllipticProblem twisted(FormField theta, double c, double beta,
                                 Gauge gauge = Gauge::MeanZero);
  /// Throws ValidationError unless psi > 0 and rho >= 0 everywhere.
  static EllipticProblem generalized(FormField theta, std::vector<double> psi,
                                     std::vector<double> rho, Gauge gauge = Gauge::MeanZero);

  const Grid& grid() const noexcept { return op_.grid(); }
  const JOperator& op() const noexcept { return op_; }
  Gauge gauge() const noexcept { return gauge_; }
  /// theta is not positive definite and rho vanishes identically.
  bool degenerate() const noexcept { return degenerate_; }
  /// Subsolution margin of the identity metric, when it was computed.
  std::optional<double> subsolution_margin;
  /// Optional reference potential for the sup-zero gauge (sup(u - ref) = 0).
  std::optional<PotentialField> gauge_reference;

  PotentialField normalize(const PotentialField& u) const;

 private:
  EllipticProblem(JOperator op, Gauge gauge);
  JOperator op_;
  Gauge gauge_;
  bool degenerate_ = false;
};

/// Pointwise psi - tr(G^-1 Theta) - rho / det G. Throws PositivityViolation
/// (with location) when omega_u is not positive definite.
std::vector<double> residual(const PotentialField& u, const EllipticProblem& problem);

double sup_norm(std::span<const double> v) noexcept;

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int gmres_restart = 40;
  int gmres_max_iter = 400;
  double forcing = 0.1;        ///< inner tolerance = forcing * outer residual
  int max_backtracks = 30;
};

struct NewtonResult {
  PotentialField solution;
  bool converged = false;
  int iterations = 0;
  int linear_iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  ///< sup-norm before each iteration and at the end
  std::vector<double> step_lengths;
};

/// Damped inexact Newton. Throws DesignedFallback for degenerate problems,
/// ConvergenceFailure on max_iter / stagnation / failed line search, and
/// PositivityViolation when u0 is not admissible.
NewtonResult newton_solve(const EllipticProblem& problem, const PotentialField& u0,
                          const NewtonOptions& options = {});

struct UniquenessReport {
  std::vector<NewtonResult> runs;
  std::vector<std::string> failures;  ///< one entry per seed, empty on success
  double max_pairwise_distance = 0.0;
  bool agree = false;
};

/// Solves from every seed (in up to `parallel` threads) and compares the
/// gauge-normalized solutions pairwise against `agreement_tol`.
UniquenessReport uniqueness_probe(const EllipticProblem& problem,
                                  const std::vector<PotentialField>& seeds,
                                  const NewtonOptions& options = {},
                                  double agreement_tol = 1e-6, int parallel = 1);

}  // namespace tjflow
