#pragma once

// Explicit time integration of the (regularised) twisted J-flow
//
//     d_t phi = c_eps - tr_{omega_phi} theta_eps - beta omega^n / omega_phi^n,
//     theta_eps = theta + eps omega,
//
// with classical RK4, a parabolic step bound, reject-and-halve on loss of
// positivity, and live tracking of the a priori estimates.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tjflow/field.hpp"
#include "tjflow/functionals.hpp"
#include "tjflow/geometry.hpp"
#include "tjflow/j_operator.hpp"

namespace tjflow {

struct FlowConfig {
  double dt_initial = 1e-4;
  double dt_max = 1e-2;
  double safety = 0.3;
  double tol_converge = 1e-8;
  long max_steps = 200000;
  std::vector<double> epsilon_schedule{0.0};
  int record_every = 10;
  double dt_floor = 1e-12;
  /// alpha = 2 (n-1) gamma * slack for the weighted C2 monitor.
  double weighted_c2_slack = 0.5;
  bool abort_on_failure = false;

  /// Throws ValidationError on inconsistent fields.
  void validate() const;
};

/// Everything about one epsilon that stays fixed during a run.
struct FlowContext {
  FlowContext(const GeometrySetup& setup, double epsilon);

  const GeometrySetup* setup;
  double epsilon;
  double c_epsilon;
  JOperator op;
  std::vector<double> theta_max_eig;  ///< pointwise largest eigenvalue of theta_eps
  std::vector<double> locus_distance; ///< distance to D, +inf without degeneracy
  bool degenerate_run;                ///< eps == 0 with a declared degeneracy
};

struct FlowState {
  FlowState(const Grid& grid, double t, PotentialField phi);

  double t;
  PotentialField phi;
  OperatorEvaluation eval;  ///< reduced Hessian, speed (d_t phi) and det at phi

  std::span<const double> speed() const noexcept { return eval.value; }
  FormField metric() const;  ///< omega_phi = I + eval.hessian
  double sup_abs_speed() const noexcept;
  double sup_speed() const noexcept;
  double inf_speed() const noexcept;
};

/// Builds a coherent state at phi (evaluates the speed field).
FlowState make_state(const FlowContext& ctx, PotentialField phi, double t = 0.0);

/// One RK4 step. Throws PositivityViolation when any stage leaves the cone and
/// NonFiniteValue on overflow; the input state is left untouched.
FlowState step(const FlowState& state, const FlowContext& ctx, double dt);

/// safety * h^2 * (min lambda)^2 / max_x(max mu + n beta / det G), capped by dt_max.
double adaptive_dt(const FlowState& state, const FlowContext& ctx, const FlowConfig& config);

struct EstimateRecord {
  double sup_abs_speed = 0.0;
  double sup_speed = 0.0;
  double inf_speed = 0.0;
  /// C_trace = sup tr_{omega_phi} theta_eps, and the smallest eigenvalue of
  /// omega_phi - theta_eps / C_trace over the grid.
  double trace_bound = 0.0;
  double trace_margin = 0.0;
  double sup_phi = 0.0;
  double inf_phi = 0.0;
  /// sup_x dist(x, D)^(2 alpha) * tr_omega omega_phi.
  double weighted_c2 = 0.0;
  /// max |tr_{omega_phi} theta_eps - (c_eps - d_t phi - beta / det G)|.
  double identity_residual = 0.0;
  double min_eig_margin = 0.0;
  /// integral d_t phi * omega_phi^n / n! (vanishes along the flow).
  double speed_moment = 0.0;
};

EstimateRecord monitor_estimates(const FlowState& state, const FlowContext& ctx,
                                 double alpha);

/// Weighted C2 exponent alpha for a setup.
double weighted_c2_alpha(const GeometrySetup& setup, const FlowConfig& config);

/// One diagnostics row. The first ten members are the CSV columns.
struct DiagnosticsRow {
  double t = 0.0;
  double dt = 0.0;
  double sup_abs_dphi = 0.0;
  double min_eig_margin = 0.0;
  double osc_phi = 0.0;
  double J_twisted = 0.0;
  double I_aubin = 0.0;
  double J_aubin = 0.0;
  double entropy = 0.0;
  double weighted_c2 = 0.0;
  // not emitted to CSV
  long step = 0;
  double dissipation = 0.0;
  EstimateRecord estimates;
};

struct MaximumPrincipleTrack {
  double initial_sup_abs = 0.0;
  double running_max_sup_abs = 0.0;
  double worst_sup_increase = 0.0;  ///< max over steps of sup d_t phi increase
  double worst_inf_decrease = 0.0;  ///< max over steps of inf d_t phi decrease
  double worst_trace_margin = 0.0;  ///< min over records of trace_margin
  double worst_energy = 0.0;        ///< max |I(phi_t) - I(phi_0)|
  double worst_sup_phi = 0.0;       ///< min over records of sup phi
  double worst_inf_phi = 0.0;       ///< max over records of inf phi
};

struct FlowResult {
  double epsilon = 0.0;
  bool converged = false;
  long steps = 0;
  long rejected_steps = 0;
  double t = 0.0;
  PotentialField final_phi;  ///< raw flow variable at the end
  PotentialField limit;      ///< mean-zero representative
  double final_sup_abs_speed = 0.0;
  std::vector<DiagnosticsRow> series;
  MaximumPrincipleTrack track;
};

using RowCallback = std::function<void(const DiagnosticsRow&)>;

/// Iterates step() with adaptive dt until sup|d_t phi| < tol_converge or
/// max_steps. Throws ConvergenceFailure when halving dt reaches dt_floor.
FlowResult run_to_convergence(const PotentialField& phi0, const GeometrySetup& setup,
                              double epsilon, const FlowConfig& config,
                              const RowCallback& on_row = {});

struct EpsilonRecord {
  double epsilon;
  std::optional<FlowResult> result;
  std::string error;
  double oscillation = 0.0;
  double weighted_c2 = 0.0;
};

struct ContinuationResult {
  std::vector<EpsilonRecord> records;
  bool all_converged = false;
  double max_oscillation = 0.0;  ///< uniform-in-eps C0 echo
};

/// Runs the schedule, warm-starting each entry from the previous limit.
ContinuationResult epsilon_continuation(
    const PotentialField& phi0, const GeometrySetup& setup, const FlowConfig& config,
    const std::function<void(double, const DiagnosticsRow&)>& on_row = {});

}  // namespace tjflow
