#include "tjflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tjflow/errors.hpp"
#include "tjflow/pointwise.hpp"
#include "tjflow/spectral.hpp"

namespace tjflow {

void FlowConfig::validate() const {
  if (!(tol_converge > 0.0)) throw ValidationError("flow: tol_converge must be positive");
  if (!(safety > 0.0 && safety < 1.0)) throw ValidationError("flow: safety must lie in (0,1)");
  if (!(dt_initial > 0.0) || !(dt_max > 0.0)) {
    throw ValidationError("flow: dt_initial and dt_max must be positive");
  }
  if (!(dt_floor > 0.0)) throw ValidationError("flow: dt_floor must be positive");
  if (max_steps < 0) throw ValidationError("flow: max_steps must be non-negative");
  if (record_every < 1) throw ValidationError("flow: record_every must be >= 1");
  if (epsilon_schedule.empty()) throw ValidationError("flow: epsilon schedule is empty");
  for (std::size_t i = 0; i < epsilon_schedule.size(); ++i) {
    if (!(epsilon_schedule[i] >= 0.0)) {
      throw ValidationError("flow: epsilon schedule entries must be non-negative");
    }
    if (i > 0 && !(epsilon_schedule[i] < epsilon_schedule[i - 1])) {
      throw ValidationError("flow: epsilon schedule must be strictly decreasing");
    }
  }
}

FlowContext::FlowContext(const GeometrySetup& s, double eps)
    : setup(&s),
      epsilon(eps),
      c_epsilon(s.c_epsilon(eps)),
      op(JOperator::twisted(s.theta_epsilon(eps), s.c_epsilon(eps), s.beta)),
      theta_max_eig(s.grid.size()),
      locus_distance(s.grid.size(), std::numeric_limits<double>::infinity()),
      degenerate_run(eps == 0.0 && s.theta.degeneracy.has_value()) {
  if (!(eps >= 0.0)) throw ValidationError("flow: epsilon must be non-negative");
  const FormField& th = op.theta();
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    if (th.dim() == 2) {
      const double a = th.plane(0, 0)[p], b = th.plane(0, 1)[p], d = th.plane(1, 1)[p];
      const double h = 0.5 * (a - d);
      theta_max_eig[p] = 0.5 * (a + d) + std::sqrt(h * h + b * b);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(th.at(p), Eigen::EigenvaluesOnly);
      theta_max_eig[p] = e.eigenvalues()(e.eigenvalues().size() - 1);
    }
    if (s.theta.degeneracy) {
      locus_distance[p] = s.theta.degeneracy->locus.distance(s.grid.coordinates(p), s.grid.dim());
    }
  }
}

FlowState::FlowState(const Grid& grid, double time, PotentialField p)
    : t(time), phi(std::move(p)), eval(grid) {}

FormField FlowState::metric() const {
  FormField g = eval.hessian;
  g.add_identity(1.0);
  return g;
}

double FlowState::sup_abs_speed() const noexcept {
  double m = 0.0;
  for (double v : eval.value) m = std::max(m, std::abs(v));
  return m;
}

double FlowState::sup_speed() const noexcept {
  return *std::max_element(eval.value.begin(), eval.value.end());
}

double FlowState::inf_speed() const noexcept {
  return *std::min_element(eval.value.begin(), eval.value.end());
}

namespace {

// Accepts the evaluation or throws. Degenerate runs tolerate a vanishing
// (>= -1e-10) eigenvalue on grid points within one spacing of the locus.
void check_admissible(const OperatorEvaluation& eval, const FlowContext& ctx) {
  for (double v : eval.value) {
    if (!std::isfinite(v)) throw NonFiniteValue("flow: non-finite speed value");
  }
  if (eval.min_eigenvalue > kPositivityTol) return;
  const auto worst = metric_min_eigenvalue(eval.hessian);
  if (!ctx.degenerate_run) {
    throw PositivityViolation("flow: omega_phi left the positive cone", worst.value, worst.point);
  }
  FormField g = eval.hessian;
  g.add_identity(1.0);
  const double h = ctx.setup->grid.spacing();
  for (std::size_t p = 0; p < g.grid().size(); ++p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(g.at(p), Eigen::EigenvaluesOnly);
    const double m = e.eigenvalues()(0);
    if (m > kPositivityTol) continue;
    if (m < -kPositivityTol || ctx.locus_distance[p] > h) {
      throw PositivityViolation("flow: omega_phi left the positive cone away from D", m, p);
    }
  }
}

void axpy(std::span<const double> x, double a, std::span<const double> y, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
}

}  // namespace

FlowState make_state(const FlowContext& ctx, PotentialField phi, double t) {
  FlowState s(ctx.setup->grid, t, std::move(phi));
  ctx.op.evaluate(s.phi.values(), s.eval);
  check_admissible(s.eval, ctx);
  return s;
}

FlowState step(const FlowState& state, const FlowContext& ctx, double dt) {
  const Grid& grid = ctx.setup->grid;
  const std::size_t count = grid.size();
  std::vector<double> y(count);
  OperatorEvaluation e2(grid), e3(grid), e4(grid);

  const auto k1 = state.speed();
  axpy(state.phi.values(), 0.5 * dt, k1, y);
  ctx.op.evaluate(y, e2);
  check_admissible(e2, ctx);
  axpy(state.phi.values(), 0.5 * dt, e2.value, y);
  ctx.op.evaluate(y, e3);
  check_admissible(e3, ctx);
  axpy(state.phi.values(), dt, e3.value, y);
  ctx.op.evaluate(y, e4);
  check_admissible(e4, ctx);

  const double w = dt / 6.0;
  for (std::size_t i = 0; i < count; ++i) {
    y[i] = w * (k1[i] + 2.0 * e2.value[i] + 2.0 * e3.value[i] + e4.value[i]);
  }
  // Keep the potential in the resolved (non-Nyquist) space.
  SpectralOps::for_grid(grid).project(y);
  PotentialField next = state.phi;
  for (std::size_t i = 0; i < count; ++i) next[i] += y[i];
  return make_state(ctx, std::move(next), state.t + dt);
}

double adaptive_dt(const FlowState& state, const FlowContext& ctx, const FlowConfig& config) {
  const int n = ctx.setup->grid.dim();
  const double beta = ctx.setup->beta;
  double denom = 0.0;
  for (std::size_t p = 0; p < ctx.theta_max_eig.size(); ++p) {
    denom = std::max(denom, ctx.theta_max_eig[p] + n * beta / state.eval.det[p]);
  }
  if (!(denom > 1e-300)) return config.dt_max;
  const double h = ctx.setup->grid.spacing();
  const double lam = std::max(state.eval.min_eigenvalue, 0.0);
  return std::min(config.dt_max, config.safety * h * h * lam * lam / denom);
}

double weighted_c2_alpha(const GeometrySetup& setup, const FlowConfig& config) {
  const double gamma = setup.theta.degeneracy ? setup.theta.degeneracy->gamma : 1.0;
  return 2.0 * (setup.grid.dim() - 1) * gamma * config.weighted_c2_slack;
}

EstimateRecord monitor_estimates(const FlowState& state, const FlowContext& ctx, double alpha) {
  EstimateRecord r;
  r.sup_abs_speed = state.sup_abs_speed();
  r.sup_speed = state.sup_speed();
  r.inf_speed = state.inf_speed();
  r.sup_phi = state.phi.sup();
  r.inf_phi = state.phi.inf();
  r.min_eig_margin = state.eval.min_eigenvalue;

  const FormField G = state.metric();
  const FormField& theta = ctx.op.theta();
  const WedgeQuotients wq = wedge_quotients(G, theta);
  const std::size_t count = G.grid().size();
  const double beta = ctx.setup->beta;
  const int n = G.dim();

  r.trace_bound = *std::max_element(wq.trace.begin(), wq.trace.end());
  double moment = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    const double via_flow = ctx.c_epsilon - state.eval.value[p] - beta * wq.volume_ratio[p];
    r.identity_residual = std::max(r.identity_residual, std::abs(wq.trace[p] - via_flow));
    moment += state.eval.value[p] * state.eval.det[p];
  }
  r.speed_moment = moment / static_cast<double>(count);

  // Smallest eigenvalue of G - theta / C_trace.
  FormField shifted = theta;
  shifted *= -1.0 / r.trace_bound;
  shifted += G;
  r.trace_margin = shifted.min_eigenvalue().value;

  double weighted = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    double tr = 0.0;
    for (int j = 0; j < n; ++j) tr += G.plane(j, j)[p];
    const double d = ctx.locus_distance[p];
    const double weight = std::isfinite(d) ? std::pow(d, 2.0 * alpha) : 1.0;
    weighted = std::max(weighted, weight * tr);
  }
  r.weighted_c2 = weighted;
  return r;
}

namespace {

DiagnosticsRow make_row(const FlowState& state, const FlowContext& ctx, double dt, long step,
                        double alpha) {
  DiagnosticsRow row;
  row.t = state.t;
  row.dt = dt;
  row.step = step;
  row.estimates = monitor_estimates(state, ctx, alpha);
  row.sup_abs_dphi = row.estimates.sup_abs_speed;
  row.min_eig_margin = state.eval.min_eigenvalue;
  row.osc_phi = state.phi.oscillation();
  const FunctionalReport f =
      evaluate_functionals(state.phi, state.eval.hessian, ctx.op.theta(), ctx.setup->beta);
  row.J_twisted = f.J_twisted;
  row.I_aubin = f.I;
  row.J_aubin = f.J;
  row.entropy = f.entropy;
  row.weighted_c2 = row.estimates.weighted_c2;
  row.dissipation = weighted_pairing(state.eval.value, state.eval.value, state.eval.det);
  return row;
}

}  // namespace

FlowResult run_to_convergence(const PotentialField& phi0, const GeometrySetup& setup,
                              double epsilon, const FlowConfig& config,
                              const RowCallback& on_row) {
  config.validate();
  if (!(phi0.grid() == setup.grid)) throw ValidationError("flow: initial potential grid mismatch");
  const FlowContext ctx(setup, epsilon);
  const double alpha = weighted_c2_alpha(setup, config);

  FlowState state = make_state(ctx, phi0);
  FlowResult result{epsilon, false, 0, 0, 0.0, phi0, phi0, 0.0, {}, {}};
  auto& track = result.track;
  track.initial_sup_abs = state.sup_abs_speed();
  track.running_max_sup_abs = track.initial_sup_abs;

  double energy0 = 0.0;
  long last_recorded = -1;
  auto record = [&](double dt) {
    DiagnosticsRow row = make_row(state, ctx, dt, result.steps, alpha);
    if (last_recorded < 0) {
      energy0 = row.I_aubin;
      track.worst_trace_margin = row.estimates.trace_margin;
      track.worst_sup_phi = row.estimates.sup_phi;
      track.worst_inf_phi = row.estimates.inf_phi;
    }
    track.worst_trace_margin = std::min(track.worst_trace_margin, row.estimates.trace_margin);
    track.worst_energy = std::max(track.worst_energy, std::abs(row.I_aubin - energy0));
    track.worst_sup_phi = std::min(track.worst_sup_phi, row.estimates.sup_phi);
    track.worst_inf_phi = std::max(track.worst_inf_phi, row.estimates.inf_phi);
    last_recorded = result.steps;
    if (on_row) on_row(row);
    result.series.push_back(std::move(row));
  };
  record(0.0);

  double last_dt = 0.0;
  while (result.steps < config.max_steps) {
    if (state.sup_abs_speed() < config.tol_converge) break;
    double dt = adaptive_dt(state, ctx, config);
    if (result.steps == 0) dt = std::min(dt, config.dt_initial);
    std::optional<FlowState> next;
    while (!next) {
      try {
        next.emplace(step(state, ctx, dt));
      } catch (const PositivityViolation& e) {
        ++result.rejected_steps;
        dt *= 0.5;
        if (dt < config.dt_floor) {
          throw ConvergenceFailure(std::string("flow: step size fell below floor: ") + e.what());
        }
      }
    }
    track.worst_sup_increase =
        std::max(track.worst_sup_increase, next->sup_speed() - state.sup_speed());
    track.worst_inf_decrease =
        std::max(track.worst_inf_decrease, state.inf_speed() - next->inf_speed());
    state = std::move(*next);
    ++result.steps;
    last_dt = dt;
    track.running_max_sup_abs = std::max(track.running_max_sup_abs, state.sup_abs_speed());
    if (result.steps % config.record_every == 0) record(dt);
  }
  if (last_recorded != result.steps) record(last_dt);

  result.final_sup_abs_speed = state.sup_abs_speed();
  result.converged = result.final_sup_abs_speed < config.tol_converge;
  result.t = state.t;
  result.final_phi = state.phi;
  result.limit = state.phi.normalized();
  return result;
}

ContinuationResult epsilon_continuation(
    const PotentialField& phi0, const GeometrySetup& setup, const FlowConfig& config,
    const std::function<void(double, const DiagnosticsRow&)>& on_row) {
  config.validate();
  ContinuationResult out;
  PotentialField start = phi0;
  bool all = true;
  for (double eps : config.epsilon_schedule) {
    EpsilonRecord rec{eps, std::nullopt, {}, 0.0, 0.0};
    try {
      RowCallback cb;
      if (on_row) cb = [&](const DiagnosticsRow& r) { on_row(eps, r); };
      FlowResult res = run_to_convergence(start, setup, eps, config, cb);
      rec.oscillation = res.limit.oscillation();
      rec.weighted_c2 = res.series.back().weighted_c2;
      if (!res.converged) {
        all = false;
        rec.error = "did not reach tol_converge within max_steps";
      }
      start = res.limit;
      rec.result = std::move(res);
    } catch (const Error& e) {
      all = false;
      rec.error = e.what();
    }
    const bool failed = !rec.error.empty();
    out.max_oscillation = std::max(out.max_oscillation, rec.oscillation);
    out.records.push_back(std::move(rec));
    if (failed && config.abort_on_failure) break;
  }
  out.all_converged = all && out.records.size() == config.epsilon_schedule.size();
  return out;
}

}  // namespace tjflow
