#include "doctest.h"

#include <cmath>
#include <cstring>

#include "tjflow/elliptic.hpp"
#include "tjflow/errors.hpp"
#include "tjflow/flow.hpp"
#include "tjflow/random.hpp"

using namespace tjflow;

namespace {

GeometrySetup constant_setup(int N, double q, double beta) {
  Grid g(2, N);
  return GeometrySetup::make({q * Eigen::MatrixXd::Identity(2, 2), PotentialField(g), std::nullopt},
                             beta);
}

GeometrySetup smooth_setup(int N) {
  Grid g(2, N);
  ThetaSpec t{0.5 * Eigen::MatrixXd::Identity(2, 2),
              sample_modes(g, {{CosineMode::Kind::Product, 0.04, {1, 1}, 0.0}}), std::nullopt};
  return GeometrySetup::make(std::move(t), 0.5);
}

PotentialField bump(const Grid& g, double a) {
  return sample_modes(g, {{CosineMode::Kind::Plane, a, {1, 0}, 0.0},
                          {CosineMode::Kind::Plane, 0.5 * a, {1, 1}, 0.3}});
}

bool same_bits(const PotentialField& a, const PotentialField& b) {
  return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("config validation") {
  FlowConfig c;
  CHECK_NOTHROW(c.validate());
  c.tol_converge = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.safety = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.epsilon_schedule = {0.1, 0.1};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.epsilon_schedule = {0.0, 0.1};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.epsilon_schedule = {};
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("adaptive dt examples") {
  FlowConfig cfg;
  cfg.safety = 0.5;
  cfg.dt_max = 1.0;
  const auto s64 = constant_setup(64, 1.0, 0.0);
  const FlowContext c64(s64, 0.0);
  const double dt64 = adaptive_dt(make_state(c64, PotentialField(s64.grid)), c64, cfg);
  CHECK(dt64 == doctest::Approx(0.5 / (64.0 * 64.0)).epsilon(1e-15));

  const auto s128 = constant_setup(128, 1.0, 0.0);
  const FlowContext c128(s128, 0.0);
  const double dt128 = adaptive_dt(make_state(c128, PotentialField(s128.grid)), c128, cfg);
  CHECK(dt128 == doctest::Approx(dt64 / 4.0).epsilon(1e-15));

  const auto s0 = constant_setup(32, 0.0, 0.0);
  const FlowContext c0(s0, 0.0);
  cfg.dt_max = 0.125;
  CHECK(adaptive_dt(make_state(c0, PotentialField(s0.grid)), c0, cfg) == 0.125);
}

TEST_CASE("stationary state only advances time") {
  const auto s = constant_setup(32, 0.5, 0.5);
  const FlowContext ctx(s, 0.0);
  const FlowState st = make_state(ctx, PotentialField(s.grid), 1.5);
  CHECK(st.sup_abs_speed() == 0.0);
  const FlowState next = step(st, ctx, 0.01);
  CHECK(next.t == 1.5 + 0.01);
  CHECK(same_bits(next.phi, st.phi));
  const auto est = monitor_estimates(st, ctx, 0.5);
  CHECK(est.sup_abs_speed == 0.0);
}

TEST_CASE("stationary run converges immediately") {
  const auto s = constant_setup(32, 0.5, 0.0);
  FlowConfig cfg;
  const FlowResult r = run_to_convergence(PotentialField(s.grid), s, 0.0, cfg);
  CHECK(r.converged);
  CHECK(r.steps == 0);
  CHECK(r.series.size() == 1);
  CHECK(r.limit.sup() == 0.0);
  CHECK(r.limit.inf() == 0.0);
}

TEST_CASE("small perturbation: sup speed decreases over the first 100 steps") {
  const auto s = constant_setup(32, 0.5, 0.0);
  const FlowContext ctx(s, 0.0);
  FlowConfig cfg;
  FlowState st = make_state(ctx, bump(s.grid, 0.01));
  double prev = st.sup_abs_speed();
  CHECK(prev > 0.0);
  for (int k = 0; k < 100; ++k) {
    st = step(st, ctx, adaptive_dt(st, ctx, cfg));
    const double cur = st.sup_abs_speed();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("flow identity and zero-mean speed") {
  const auto s = smooth_setup(32);
  const FlowContext ctx(s, 0.05);
  Rng rng(61);
  FlowConfig cfg;
  FlowState st = make_state(ctx, random_potential(s.grid, rng, 0.5));
  for (int k = 0; k < 50; ++k) {
    const auto est = monitor_estimates(st, ctx, 0.5);
    CHECK(est.identity_residual < 1e-13);
    CHECK(std::abs(est.speed_moment) < 1e-8);
    st = step(st, ctx, adaptive_dt(st, ctx, cfg));
  }
}

TEST_CASE("gauge covariance") {
  const auto s = smooth_setup(32);
  const FlowContext ctx(s, 0.0);
  Rng rng(62);
  const PotentialField phi0 = random_potential(s.grid, rng, 0.4);
  PotentialField shifted = phi0;
  shifted += 3.0;
  FlowState a = make_state(ctx, phi0), b = make_state(ctx, shifted);
  for (int k = 0; k < 40; ++k) {
    a = step(a, ctx, 2e-4);
    b = step(b, ctx, 2e-4);
  }
  double err = 0.0;
  for (std::size_t i = 0; i < a.phi.size(); ++i) err = std::max(err, std::abs(b.phi[i] - a.phi[i] - 3.0));
  CHECK(err < 1e-12);
}

TEST_CASE("too large a step leaves the cone") {
  const auto s = smooth_setup(32);
  const FlowContext ctx(s, 0.0);
  const FlowState st = make_state(ctx, bump(s.grid, 0.03));
  CHECK_THROWS_AS(step(st, ctx, 0.5), PositivityViolation);
  CHECK_THROWS_AS(make_state(ctx, bump(s.grid, 0.5)), PositivityViolation);
}

TEST_CASE("smooth run: convergence, estimates, and agreement with Newton") {
  const auto s = smooth_setup(32);
  FlowConfig cfg;
  cfg.record_every = 50;
  Rng rng(63);
  const PotentialField phi1 = random_potential(s.grid, rng, 0.4);
  const FlowResult a = run_to_convergence(PotentialField(s.grid), s, 0.0, cfg);
  const FlowResult b = run_to_convergence(phi1, s, 0.0, cfg);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(a.final_sup_abs_speed < 1e-8);
  CHECK(sup_distance(a.limit, b.limit) < 1e-6);
  CHECK(std::abs(a.limit.mean()) < 1e-14);

  const auto problem = EllipticProblem::twisted(s);
  CHECK(sup_norm(residual(a.limit, problem)) < 1e-6);
  const auto newton = newton_solve(problem, PotentialField(s.grid));
  REQUIRE(newton.converged);
  CHECK(sup_distance(a.limit, newton.solution) < 1e-6);

  for (const FlowResult* r : {&a, &b}) {
    CHECK(r->track.running_max_sup_abs <= r->track.initial_sup_abs + 1e-8);
    CHECK(r->track.worst_sup_increase <= 1e-8);
    CHECK(r->track.worst_inf_decrease <= 1e-8);
    CHECK(r->track.worst_trace_margin >= -1e-8);
    CHECK(r->track.worst_energy < 5e-6);
    CHECK(r->track.worst_sup_phi >= -5e-6);
    CHECK(r->track.worst_inf_phi <= 5e-6);
  }
  for (const auto& row : a.series) CHECK(row.min_eig_margin > 0.0);
}

TEST_CASE("singleton schedule equals a single run") {
  const auto s = smooth_setup(32);
  FlowConfig cfg;
  cfg.epsilon_schedule = {0.05};
  const FlowResult direct = run_to_convergence(PotentialField(s.grid), s, 0.05, cfg);
  const ContinuationResult cont = epsilon_continuation(PotentialField(s.grid), s, cfg);
  REQUIRE(cont.records.size() == 1);
  REQUIRE(cont.records[0].result.has_value());
  CHECK(cont.all_converged);
  CHECK(same_bits(cont.records[0].result->limit, direct.limit));
  CHECK(cont.records[0].result->steps == direct.steps);
}

TEST_CASE("regularised limits approach the unregularised one linearly") {
  const auto s = smooth_setup(32);
  FlowConfig cfg;
  cfg.epsilon_schedule = {0.1, 0.05, 0.0};
  const ContinuationResult cont = epsilon_continuation(PotentialField(s.grid), s, cfg);
  REQUIRE(cont.all_converged);
  const auto& l = cont.records;
  const double d1 = sup_distance(l[0].result->limit, l[2].result->limit);
  const double d2 = sup_distance(l[1].result->limit, l[2].result->limit);
  CHECK(d1 > 1e-6);
  const double slope = std::log(d1 / d2) / std::log(2.0);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
  CHECK(cont.max_oscillation >= l[2].oscillation);
}

TEST_CASE("degenerate context") {
  Grid g(2, 32);
  const auto s = GeometrySetup::make(degenerate_theta_example(g, 1.0, 1.0), 0.5);
  const FlowContext c0(s, 0.0), c1(s, 0.1);
  CHECK(c0.degenerate_run);
  CHECK_FALSE(c1.degenerate_run);
  CHECK(c0.locus_distance[5] == 0.0);                   // x1 = 0
  CHECK(c0.locus_distance[16 * 32 + 5] == doctest::Approx(0.5));
  CHECK(c1.c_epsilon == doctest::Approx(2.0 + 0.5 + 0.2));
  FlowConfig cfg;
  CHECK(weighted_c2_alpha(s, cfg) == doctest::Approx(1.0));

  const auto smooth = constant_setup(16, 1.0, 0.0);
  CHECK(std::isinf(FlowContext(smooth, 0.0).locus_distance[0]));
}

TEST_CASE("rows are recorded and the callback sees each of them") {
  const auto s = smooth_setup(16);
  FlowConfig cfg;
  cfg.record_every = 7;
  cfg.max_steps = 40;
  std::size_t seen = 0;
  const FlowResult r = run_to_convergence(bump(s.grid, 0.02), s, 0.0, cfg,
                                          [&](const DiagnosticsRow&) { ++seen; });
  CHECK_FALSE(r.converged);
  CHECK(r.steps == 40);
  CHECK(seen == r.series.size());
  CHECK(r.series.front().step == 0);
  CHECK(r.series.back().step == 40);
  for (std::size_t i = 1; i < r.series.size(); ++i) CHECK(r.series[i].t > r.series[i - 1].t);
}
