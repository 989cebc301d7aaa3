#include "tjflow/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>

#include "tjflow/elliptic.hpp"
#include "tjflow/errors.hpp"
#include "tjflow/flow.hpp"
#include "tjflow/functionals.hpp"
#include "tjflow/geometry.hpp"
#include "tjflow/key_lemma.hpp"
#include "tjflow/random.hpp"
#include "tjflow/spectral.hpp"

namespace tjflow {

namespace {

#define TJFLOW_TOLERANCES(X)                                                              \
  X(stationary) X(subsolution_margin) X(converge_speed) X(converge_steps)                 \
  X(converge_residual) X(monotone) X(energy_identity) X(derivative_floor) X(conservation) \
  X(max_principle) X(trace_margin) X(uniqueness) X(cohomology) X(gradient)                \
  X(degenerate_oscillation) X(degenerate_residual) X(degenerate_distance) X(degenerate_c2) \
  X(degenerate_max_steps) X(key_resolution) X(key_triples) X(sandwich) X(sandwich_samples) \
  X(refinement)

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// theta0 = diag(0.5, 0.5), psi = 0.04 cos(2 pi x1) cos(2 pi x2), beta = 0.5.
GeometrySetup smooth_fixture(int N) {
  const Grid grid(2, N);
  ThetaSpec theta{Eigen::MatrixXd::Identity(2, 2) * 0.5,
                  sample_modes(grid, {{CosineMode::Kind::Product, 0.04, {1, 1}, 0.0}}),
                  std::nullopt};
  return GeometrySetup::make(std::move(theta), 0.5);
}

FlowConfig smooth_flow_config(const AcceptanceTolerances& tol) {
  FlowConfig cfg;
  cfg.tol_converge = tol.converge_speed;
  cfg.max_steps = static_cast<long>(tol.converge_steps);
  cfg.record_every = 10;
  return cfg;
}

struct Suite {
  const AcceptanceOptions& opt;
  const AcceptanceTolerances& tol;
  std::optional<GeometrySetup> smooth;
  std::optional<FlowResult> smooth_flow;
  std::string smooth_error;

  explicit Suite(const AcceptanceOptions& o) : opt(o), tol(o.tol) {}

  const GeometrySetup& smooth_setup() {
    if (!smooth) smooth = smooth_fixture(opt.N);
    return *smooth;
  }

  // Criteria 2-5 share one trajectory.
  const FlowResult* smooth_run() {
    if (!smooth_flow && smooth_error.empty()) {
      try {
        smooth_flow = run_to_convergence(PotentialField(smooth_setup().grid), smooth_setup(),
                                         0.0, smooth_flow_config(tol));
      } catch (const Error& e) {
        smooth_error = e.what();
      }
    }
    return smooth_flow ? &*smooth_flow : nullptr;
  }

  void stationarity(CriterionResult& r) {
    const Grid grid(2, opt.N);
    double worst_speed = 0.0, worst_residual = 0.0;
    bool newton_ok = true;
    for (double q : {0.3, 1.0, 2.5}) {
      for (double beta : {0.0, 0.7, 3.0}) {
        ThetaSpec theta{Eigen::MatrixXd::Identity(2, 2) * q, PotentialField(grid), std::nullopt};
        const GeometrySetup setup = GeometrySetup::make(std::move(theta), beta);
        const FlowContext ctx(setup, 0.0);
        const FlowState s = make_state(ctx, PotentialField(grid));
        worst_speed = std::max(worst_speed, s.sup_abs_speed());
        const auto problem = EllipticProblem::twisted(setup);
        worst_residual = std::max(worst_residual, sup_norm(residual(PotentialField(grid), problem)));
        const NewtonResult nr = newton_solve(problem, PotentialField(grid));
        newton_ok = newton_ok && nr.iterations == 0;
      }
    }
    r.metrics = {{"sup_speed", worst_speed}, {"sup_residual", worst_residual}};
    r.passed = worst_speed <= tol.stationary && worst_residual <= tol.stationary && newton_ok;
    r.detail = "sup|speed|=" + fmt(worst_speed) + " sup|residual|=" + fmt(worst_residual) +
               " over 9 (q,beta) pairs";
  }

  void convergence(CriterionResult& r) {
    const GeometrySetup& setup = smooth_setup();
    const double margin =
        subsolution_check(PotentialField(setup.grid), setup.theta_field, setup.c_beta).margin;
    const FlowResult* f = smooth_run();
    if (!f) {
      r.detail = "flow failed: " + smooth_error;
      return;
    }
    const double res = sup_norm(residual(f->limit, EllipticProblem::twisted(setup)));
    r.metrics = {{"subsolution_margin", margin}, {"steps", f->steps},
                 {"final_sup_speed", f->final_sup_abs_speed}, {"residual", res}};
    r.passed = margin >= tol.subsolution_margin && f->converged &&
               static_cast<double>(f->steps) <= tol.converge_steps && res < tol.converge_residual;
    r.detail = "margin=" + fmt(margin) + " steps=" + std::to_string(f->steps) +
               " sup|dphi|=" + fmt(f->final_sup_abs_speed) + " residual=" + fmt(res);
  }

  void monotone(CriterionResult& r) {
    const FlowResult* f = smooth_run();
    if (!f) {
      r.detail = "flow failed: " + smooth_error;
      return;
    }
    std::vector<EnergySample> samples;
    for (const auto& row : f->series) samples.push_back({row.t, row.J_twisted, row.dissipation});
    const MonotonicityReport m =
        flow_monotonicity_check(samples, tol.monotone, tol.energy_identity, tol.derivative_floor);
    r.metrics = {{"worst_increase", m.worst_increase},
                 {"worst_relative_error", m.worst_relative_error},
                 {"identity_checks", m.identity_checks}};
    r.passed = m.monotone && m.identity_ok && m.identity_checks > 0;
    r.detail = "worst increase=" + fmt(m.worst_increase) + " identity rel err=" +
               fmt(m.worst_relative_error) + " over " + std::to_string(m.identity_checks) +
               " samples";
  }

  void conservation(CriterionResult& r) {
    const FlowResult* f = smooth_run();
    if (!f) {
      r.detail = "flow failed: " + smooth_error;
      return;
    }
    double worst = 0.0;
    for (const auto& row : f->series) worst = std::max(worst, std::abs(row.I_aubin));
    const double sup_phi = f->track.worst_sup_phi, inf_phi = f->track.worst_inf_phi;
    r.metrics = {{"max_abs_I", worst}, {"min_sup_phi", sup_phi}, {"max_inf_phi", inf_phi}};
    r.passed = worst <= tol.conservation && sup_phi >= -tol.conservation &&
               inf_phi <= tol.conservation;
    r.detail = "max|I|=" + fmt(worst) + " min sup phi=" + fmt(sup_phi) +
               " max inf phi=" + fmt(inf_phi);
  }

  void maximum_principle(CriterionResult& r) {
    const FlowResult* f = smooth_run();
    if (!f) {
      r.detail = "flow failed: " + smooth_error;
      return;
    }
    const double excess = f->track.running_max_sup_abs - f->track.initial_sup_abs;
    r.metrics = {{"sup_speed_excess", excess}, {"trace_margin", f->track.worst_trace_margin}};
    r.passed = excess <= tol.max_principle && f->track.worst_trace_margin >= -tol.trace_margin;
    r.detail = "running max excess=" + fmt(excess) +
               " min eig(omega_phi - theta/C_trace)=" + fmt(f->track.worst_trace_margin);
  }

  void uniqueness(CriterionResult& r) {
    const GeometrySetup& setup = smooth_setup();
    const FlowResult* f = smooth_run();
    if (!f) {
      r.detail = "flow failed: " + smooth_error;
      return;
    }
    Rng rng(opt.seed ^ 0x6a09e667f3bcc908ull);
    const PotentialField perturbed = random_potential(setup.grid, rng, 0.3);
    const FlowResult other =
        run_to_convergence(perturbed, setup, 0.0, smooth_flow_config(tol));
    const auto problem = EllipticProblem::twisted(setup);
    const UniquenessReport probe =
        uniqueness_probe(problem, {PotentialField(setup.grid), perturbed}, {}, tol.uniqueness,
                         opt.parallel);
    const double flows = sup_distance(f->limit, other.limit);
    const double newton = probe.max_pairwise_distance;
    const double cross = probe.runs.empty() ? INFINITY
                                            : sup_distance(f->limit, probe.runs[0].solution);
    r.metrics = {{"flow_vs_flow", flows}, {"newton_vs_newton", newton}, {"flow_vs_newton", cross}};
    r.passed = other.converged && probe.agree && flows <= tol.uniqueness &&
               cross <= tol.uniqueness;
    r.detail = "flow-flow=" + fmt(flows) + " newton-newton=" + fmt(newton) +
               " flow-newton=" + fmt(cross);
  }

  void cohomology(CriterionResult& r) {
    Rng rng(opt.seed ^ 0xbb67ae8584caa73bull);
    const Grid grid(2, opt.N);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const Eigen::MatrixXd theta0 = random_spd(rng, 2, 0.1, 3.0);
      const double beta = rng.uniform(0.0, 2.0);
      ThetaSpec spec{theta0, random_potential(grid, rng, rng.uniform(0.01, 2.0)), std::nullopt};
      const double c = cohomology_constant(spec, beta);
      worst = std::max(worst, std::abs(c - (theta0.trace() + beta)));
    }
    r.metrics = {{"max_error", worst}};
    r.passed = worst <= tol.cohomology;
    r.detail = "max |c - (tr theta0 + beta)|=" + fmt(worst) + " over 10 random psi";
  }

  void gradient(CriterionResult& r) {
    const GeometrySetup& setup = smooth_setup();
    const Grid& grid = setup.grid;
    const FormField& theta = setup.theta_field;
    const JOperator op = JOperator::twisted(theta, setup.c_beta, setup.beta);
    Rng rng(opt.seed ^ 0x3c6ef372fe94f82bull);
    double worst = 0.0;
    const double s = 1e-4;
    for (int b = 0; b < 5; ++b) {
      const PotentialField base = random_potential(grid, rng, 0.3);
      OperatorEvaluation e(grid);
      op.evaluate(base.values(), e);
      // Directions mix a random field with the gradient itself so that the
      // pairing is bounded away from zero.
      PotentialField grad(grid);
      for (std::size_t p = 0; p < grid.size(); ++p) grad[p] = e.value[p] * e.det[p];
      SpectralOps::for_grid(grid).project(grad.values());
      grad *= 1.0 / std::max(grad.sup(), -grad.inf());
      for (int d = 0; d < 20; ++d) {
        PotentialField v = random_potential(grid, rng, 0.1);
        v *= 1.0 / std::max(v.sup(), -v.inf());
        const double weight = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
        for (std::size_t p = 0; p < grid.size(); ++p) v[p] += weight * grad[p];
        PotentialField plus = base, minus = base;
        for (std::size_t p = 0; p < grid.size(); ++p) {
          plus[p] += s * v[p];
          minus[p] -= s * v[p];
        }
        const double fd =
            (twisted_J(plus, theta, setup.beta) - twisted_J(minus, theta, setup.beta)) / (2 * s);
        const double exact = -weighted_pairing(v.values(), e.value, e.det);
        worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
      }
    }
    r.metrics = {{"worst_relative_error", worst}};
    r.passed = worst <= tol.gradient;
    r.detail = "worst relative error=" + fmt(worst) + " over 5x20 directions";
  }

  void degenerate(CriterionResult& r) {
    const Grid grid(2, opt.N);
    const GeometrySetup setup = GeometrySetup::make(degenerate_theta_example(grid, 1.0, 1.0), 0.5);
    FlowConfig cfg;
    cfg.epsilon_schedule = {0.1, 0.05, 0.025, 0.0125};
    cfg.max_steps = static_cast<long>(tol.degenerate_max_steps);
    cfg.record_every = 100;
    const ContinuationResult cont = epsilon_continuation(PotentialField(grid), setup, cfg);
    nlohmann::json per = nlohmann::json::array();
    for (const auto& rec : cont.records) {
      per.push_back({{"epsilon", rec.epsilon},
                     {"converged", rec.result && rec.result->converged},
                     {"steps", rec.result ? rec.result->steps : 0},
                     {"oscillation", rec.oscillation},
                     {"weighted_c2", rec.weighted_c2},
                     {"error", rec.error}});
    }
    r.metrics["runs"] = per;
    if (!cont.all_converged) {
      r.detail = "not every epsilon-run converged";
      for (const auto& rec : cont.records) {
        if (!rec.error.empty()) r.detail += "; eps=" + fmt(rec.epsilon) + ": " + rec.error;
      }
      return;
    }
    const auto& a = cont.records[cont.records.size() - 2];
    const auto& b = cont.records.back();
    const double osc_change = std::abs(b.oscillation - a.oscillation) / a.oscillation;
    const double c2_change = std::abs(b.weighted_c2 - a.weighted_c2) / a.weighted_c2;
    const auto problem = EllipticProblem::twisted(setup, b.epsilon);
    const std::vector<double> res = residual(b.result->limit, problem);
    double restricted = 0.0;
    const Locus& locus = setup.theta.degeneracy->locus;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      if (locus.distance(grid.coordinates(p), 2) > tol.degenerate_distance) {
        restricted = std::max(restricted, std::abs(res[p]));
      }
    }
    r.metrics["oscillation_change"] = osc_change;
    r.metrics["weighted_c2_change"] = c2_change;
    r.metrics["restricted_residual"] = restricted;
    r.passed = osc_change < tol.degenerate_oscillation && restricted < tol.degenerate_residual &&
               c2_change < tol.degenerate_c2;
    r.detail = "osc change=" + fmt(osc_change) + " residual(dist>" +
               fmt(tol.degenerate_distance) + ")=" + fmt(restricted) +
               " weighted C2 change=" + fmt(c2_change);
  }

  void key_lemma(CriterionResult& r) {
    Rng rng(opt.seed ^ 0xa54ff53a5f1d36f1ull);
    const int resolution = static_cast<int>(tol.key_resolution);
    const int triples = static_cast<int>(tol.key_triples);
    int passed = 0, total = 0;
    std::string first_failure;
    double largest_K = 0.0;
    for (int i = 0; i < triples; ++i) {
      const double c = rng.uniform(1.0, 5.0);
      double delta0 = 0.0;
      while (!(delta0 > 0.0)) delta0 = rng.uniform(0.0, std::min(1.0, c));
      const double C0 = rng.uniform(0.1, 5.0);
      for (int n : {1, 2}) {
        KeyLemmaHypotheses h;
        h.n = n;
        h.c = c;
        h.delta0 = delta0;
        h.C0 = C0;
        ++total;
        const BoundSearch s = find_passing_bound(h, resolution);
        if (s.K) {
          ++passed;
          largest_K = std::max(largest_K, *s.K);
        } else if (first_failure.empty()) {
          first_failure = "n=" + std::to_string(n) + " c=" + fmt(c) + " delta0=" + fmt(delta0) +
                          " C0=" + fmt(C0);
        }
      }
    }
    // Injected violations: drop the cone condition with C0 > c.
    int witnessed = 0;
    const int injected = 20;
    std::string witness;
    for (int i = 0; i < injected; ++i) {
      KeyLemmaHypotheses h;
      h.n = 2;
      h.c = rng.uniform(1.0, 4.0);
      h.delta0 = rng.uniform(0.05, 0.95);
      h.C0 = rng.uniform(h.c + 0.5, 5.0);
      h.enforce_cone = false;
      const BoundSearch s = find_passing_bound(h, resolution);
      if (!s.K && s.last.counterexample &&
          s.last.counterexample->kind == KeyLemmaWitness::Kind::LambdaExceeds) {
        ++witnessed;
        if (witness.empty()) witness = s.last.counterexample->describe();
      }
    }
    r.metrics = {{"passing", passed}, {"total", total}, {"largest_K", largest_K},
                 {"injected", injected}, {"unbounded_witnesses", witnessed}};
    r.passed = passed == total && witnessed == injected;
    r.detail = std::to_string(passed) + "/" + std::to_string(total) +
               " hypotheses bounded (max K=" + fmt(largest_K) + "); " +
               std::to_string(witnessed) + "/" + std::to_string(injected) +
               " injected violations unbounded";
    if (!first_failure.empty()) r.detail += "; first failure " + first_failure;
  }

  void sandwich(CriterionResult& r) {
    Rng rng(opt.seed ^ 0x510e527fade682d1ull);
    const Grid grid(2, opt.N);
    const int samples = static_cast<int>(tol.sandwich_samples);
    double worst = -INFINITY;
    int ok = 0;
    for (int i = 0; i < samples; ++i) {
      const PotentialField phi = random_potential(grid, rng, rng.uniform(0.05, 0.95));
      const double J = aubin_J(phi);
      const double I = aubin_I_difference(phi);
      const double n = 2.0;
      const double lower = J / n - (I - J);
      const double upper = (I - J) - n * J;
      worst = std::max({worst, lower, upper});
      if (lower <= tol.sandwich && upper <= tol.sandwich) ++ok;
    }
    r.metrics = {{"worst_violation", worst}, {"passing", ok}, {"samples", samples}};
    r.passed = ok == samples;
    r.detail = std::to_string(ok) + "/" + std::to_string(samples) +
               " fixtures satisfy J/n <= I-J <= nJ (worst slack use " + fmt(worst) + ")";
  }

  void refinement(CriterionResult& r) {
    const GeometrySetup fine = smooth_fixture(opt.N);
    const GeometrySetup coarse = smooth_fixture(opt.N / 2);
    const NewtonResult a = newton_solve(EllipticProblem::twisted(fine), PotentialField(fine.grid));
    const NewtonResult b =
        newton_solve(EllipticProblem::twisted(coarse), PotentialField(coarse.grid));
    double diff = 0.0;
    for (std::size_t p = 0; p < coarse.grid.size(); ++p) {
      const auto idx = coarse.grid.indices(p);
      const std::size_t q = static_cast<std::size_t>(2 * idx[0]) * fine.grid.points_per_axis() +
                            static_cast<std::size_t>(2 * idx[1]);
      diff = std::max(diff, std::abs(a.solution[q] - b.solution[p]));
    }
    r.metrics = {{"sup_difference", diff}};
    r.passed = diff < tol.refinement;
    r.detail = "sup|u_" + std::to_string(opt.N) + " - u_" + std::to_string(opt.N / 2) +
               "|=" + fmt(diff);
  }
};

}  // namespace

void AcceptanceTolerances::apply(const std::map<std::string, double>& overrides) {
  for (const auto& [key, value] : overrides) {
    bool found = false;
#define X(name)          \
  if (key == #name) {    \
    name = value;        \
    found = true;        \
  }
    TJFLOW_TOLERANCES(X)
#undef X
    if (!found) throw ValidationError("acceptance: unknown tolerance '" + key + "'");
  }
}

nlohmann::json AcceptanceTolerances::to_json() const {
  nlohmann::json j;
#define X(name) j[#name] = name;
  TJFLOW_TOLERANCES(X)
#undef X
  return j;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  Suite suite(options);
  using Fn = void (Suite::*)(CriterionResult&);
  const std::vector<std::pair<std::string, Fn>> table = {
      {"stationarity", &Suite::stationarity},
      {"convergence-cone", &Suite::convergence},
      {"monotone-energy", &Suite::monotone},
      {"conservation", &Suite::conservation},
      {"maximum-principle", &Suite::maximum_principle},
      {"uniqueness", &Suite::uniqueness},
      {"cohomology-exactness", &Suite::cohomology},
      {"gradient-identity", &Suite::gradient},
      {"degenerate-continuation", &Suite::degenerate},
      {"key-lemma", &Suite::key_lemma},
      {"functional-sandwich", &Suite::sandwich},
      {"grid-refinement", &Suite::refinement},
  };
  std::vector<CriterionResult> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!options.only.empty() && !options.only.count(id)) continue;
    CriterionResult r;
    r.id = id;
    r.name = table[i].first;
    const auto start = std::chrono::steady_clock::now();
    try {
      (suite.*table[i].second)(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.on_result) options.on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "%s %2d %-24s", r.passed ? "PASS" : "FAIL", r.id,
                r.name.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
  return std::string(head) + " " + r.detail + tail;
}

}  // namespace tjflow
