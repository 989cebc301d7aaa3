#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "tjflow/errors.hpp"
#include "tjflow/functionals.hpp"
#include "tjflow/geometry.hpp"
#include "tjflow/random.hpp"

using namespace tjflow;

namespace {

// Per-point pieces along the linear path t * phi, evaluated with Eigen.
struct PathOracle {
  const PotentialField& phi;
  FormField H;
  FormField theta;
  double theta_bar;

  PathOracle(const PotentialField& p, FormField th, double tbar)
      : phi(p), H(reduced_hessian(p)), theta(std::move(th)), theta_bar(tbar) {}

  // d/dt I(t phi) = integral phi omega_{t phi}^n / n!
  double dI(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) s += phi[i] * metric(i, t).determinant();
    return s / static_cast<double>(phi.size());
  }
  // d/dt J^theta(t phi)
  double dJtheta(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const Eigen::MatrixXd G = metric(i, t);
      const double d = G.determinant();
      const Eigen::MatrixXd adj = d * G.inverse();
      s += phi[i] * ((adj * theta.at(i)).trace() - theta_bar * d);
    }
    return s / static_cast<double>(phi.size());
  }
  Eigen::MatrixXd metric(std::size_t i, double t) const {
    const int n = phi.grid().dim();
    return Eigen::MatrixXd::Identity(n, n) + t * H.at(i);
  }
};

// Composite Simpson rule with 64 subintervals on [0, 1].
template <class F>
double simpson64(F&& f) {
  const int m = 64;
  const double h = 1.0 / m;
  double s = f(0.0) + f(1.0);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return s * h / 3.0;
}

ThetaSpec random_theta(const Grid& g, Rng& rng) {
  const int n = g.dim();
  return {random_spd(rng, n, 0.4, 1.2), random_potential(g, rng, 0.3), std::nullopt};
}

}  // namespace

TEST_CASE("mixed discriminant") {
  Rng rng(51);
  for (int n : {2, 3}) {
    const Eigen::MatrixXd A = random_spd(rng, n, 0.2, 2.0);
    std::vector<Eigen::MatrixXd> same(n, A);
    CHECK(mixed_discriminant(same) == doctest::Approx(A.determinant()).epsilon(1e-12));
    std::vector<Eigen::MatrixXd> mix(n, Eigen::MatrixXd::Identity(n, n));
    mix[0] = A;
    CHECK(mixed_discriminant(mix) == doctest::Approx(A.trace() / n).epsilon(1e-12));
  }
}

TEST_CASE("functionals at zero and at constants") {
  for (int n : {2, 3}) {
    Grid g(n, n == 2 ? 16 : 8);
    const FormField theta = FormField::identity(g);
    const PotentialField zero(g);
    const auto r0 = evaluate_functionals(zero, theta, 0.5);
    CHECK(r0.I == 0.0);
    CHECK(r0.J == 0.0);
    CHECK(r0.J_twisted == 0.0);
    CHECK(r0.entropy == 0.0);
    const PotentialField c(g, 2.5);
    CHECK(aubin_I(c) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(std::abs(aubin_J(c)) < 1e-15);
    CHECK(std::abs(twisted_J(PotentialField(g, 5.0), theta, 0.5)) < 1e-14);
    CHECK(std::abs(mabuchi_entropy(c)) < 1e-15);
  }
}

TEST_CASE("closed forms match linear-path quadrature") {
  Rng rng(52);
  for (int n : {2, 3}) {
    Grid g(n, n == 2 ? 32 : 10);
    for (int trial = 0; trial < 4; ++trial) {
      const PotentialField phi = random_potential(g, rng, 0.6);
      const ThetaSpec ts = random_theta(g, rng);
      const double tbar = ts.theta0.trace();
      const double beta = rng.uniform(0.0, 1.0);
      PathOracle o(phi, ts.realize(), tbar);
      const double I = simpson64([&](double t) { return o.dI(t); });
      const double J = phi.mean() - I;
      const double Jth = simpson64([&](double t) { return o.dJtheta(t); });
      const auto r = evaluate_functionals(phi, o.theta, beta);
      CHECK(std::abs(r.I - I) < 1e-6);
      CHECK(std::abs(r.J - J) < 1e-6);
      CHECK(std::abs(r.J_theta - Jth) < 1e-6);
      CHECK(std::abs(r.J_twisted - (Jth + beta * J)) < 1e-6);
      CHECK(r.theta_bar == doctest::Approx(tbar).epsilon(1e-12));
    }
  }
}

TEST_CASE("translation behaviour") {
  Rng rng(53);
  Grid g(2, 32);
  const PotentialField phi = random_potential(g, rng, 0.8);
  PotentialField shifted = phi;
  shifted += 5.0;
  const FormField theta = random_theta(g, rng).realize();
  const auto a = evaluate_functionals(phi, theta, 0.7);
  const auto b = evaluate_functionals(shifted, theta, 0.7);
  CHECK(std::abs(a.J_twisted - b.J_twisted) < 1e-10);
  CHECK(std::abs(a.J - b.J) < 1e-12);
  CHECK(std::abs(a.entropy - b.entropy) < 1e-12);
  CHECK(std::abs(b.I - a.I - 5.0) < 1e-12);
  CHECK(std::abs(aubin_I(energy_normalized(phi))) < 1e-14);
}

TEST_CASE("positivity of J and the entropy") {
  Rng rng(54);
  for (int n : {2, 3}) {
    Grid g(n, n == 2 ? 32 : 10);
    for (int trial = 0; trial < 20; ++trial) {
      const PotentialField phi = random_potential(g, rng, rng.uniform(0.05, 0.95));
      const auto r = evaluate_functionals(phi, FormField::identity(g), 0.0);
      CHECK(r.J >= -1e-15);
      CHECK(r.entropy >= -1e-15);
      CHECK(r.mabuchi == r.entropy);
    }
  }
  Grid g(2, 32);
  const PotentialField small =
      sample_modes(g, {{CosineMode::Kind::Plane, 0.01, {1, 0}, 0.0}});
  CHECK(mabuchi_entropy(small) > 0.0);
}

TEST_CASE("sandwich inequality") {
  Rng rng(55);
  for (int s = 0; s < 100; ++s) {
    const int n = 2 + s % 2;
    Grid g(n, n == 2 ? 32 : 10);
    const PotentialField phi = random_potential(g, rng, rng.uniform(0.05, 0.95));
    const double I = aubin_I_difference(phi), J = aubin_J(phi);
    CHECK(J / n <= I - J + 1e-12);
    CHECK(I - J <= n * J + 1e-12);
  }
}

TEST_CASE("non-positive metric is rejected") {
  Grid g(2, 32);
  const PotentialField bad = sample_modes(g, {{CosineMode::Kind::Plane, 0.2, {1, 0}, 0.0}});
  CHECK_THROWS_AS(evaluate_functionals(bad, FormField::identity(g), 0.0), PositivityViolation);
  CHECK_THROWS_AS(mabuchi_entropy(bad), PositivityViolation);
}

TEST_CASE("gradient of the twisted functional is minus the speed") {
  Rng rng(56);
  Grid g(2, 32);
  const ThetaSpec ts = random_theta(g, rng);
  const FormField theta = ts.realize();
  const double beta = 0.5, c = ts.theta0.trace() + beta;
  for (int trial = 0; trial < 5; ++trial) {
    const PotentialField phi = random_potential(g, rng, 0.5);
    const PotentialField v = random_potential(g, rng, 0.3);
    const FormField H = reduced_hessian(phi);
    double pairing = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2, 2) + H.at(i);
      const double d = G.determinant();
      const double speed = c - (G.inverse() * theta.at(i)).trace() - beta / d;
      pairing += v[i] * speed * d;
    }
    pairing /= static_cast<double>(g.size());
    const double s = 1e-4;
    const double fd = (twisted_J(phi + s * v, theta, beta) - twisted_J(phi - s * v, theta, beta)) /
                      (2 * s);
    CHECK(std::abs(fd + pairing) <= 1e-6 * std::max(1e-3, std::abs(pairing)) + 1e-9);
  }
}

TEST_CASE("weighted pairing") {
  std::vector<double> v{1, 2, 3, 4}, s{1, 1, 2, 2}, d{1, 0.5, 1, 0.5};
  CHECK(weighted_pairing(v, s, d) == doctest::Approx((1 + 1 + 6 + 4) / 4.0));
}

TEST_CASE("monotonicity check") {
  std::vector<EnergySample> flat(10);
  for (int i = 0; i < 10; ++i) flat[i] = {0.1 * i, -1.0, 0.0};
  const auto r0 = flow_monotonicity_check(flat);
  CHECK(r0.monotone);
  CHECK(r0.identity_ok);
  CHECK(r0.identity_checks == 0);

  std::vector<EnergySample> decay;
  for (int i = 0; i <= 400; ++i) {
    const double t = 0.01 * i + 0.003 * std::sin(i);  // non-uniform, increasing
    decay.push_back({t, std::exp(-2 * t), 2 * std::exp(-2 * t)});
  }
  const auto r1 = flow_monotonicity_check(decay);
  CHECK(r1.monotone);
  CHECK(r1.identity_ok);
  CHECK(r1.identity_checks > 100);
  CHECK(r1.final_value == decay.back().J_twisted);

  decay[200].J_twisted = decay[199].J_twisted + 1e-8;
  CHECK_FALSE(flow_monotonicity_check(decay).monotone);

  for (auto& s : decay) s.dissipation *= 1.1;
  CHECK_FALSE(flow_monotonicity_check(decay).identity_ok);
}
