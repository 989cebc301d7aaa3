#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "tjflow/errors.hpp"
#include "tjflow/key_lemma.hpp"
#include "tjflow/random.hpp"

using namespace tjflow;

TEST_CASE("scalar case passes at K = 10 c / delta0") {
  KeyLemmaHypotheses h;
  h.n = 1;
  h.c = 1.5;
  h.delta0 = 0.5;
  h.C0 = h.c - h.delta0;
  const auto r = key_c0_verify(h, 10.0 * h.c / h.delta0, 200);
  CHECK(r.passed);
  CHECK_FALSE(r.counterexample.has_value());
  CHECK(r.resolution == 200);
  CHECK(r.points_examined > 0);
}

TEST_CASE("delta0 = c forces the off-diagonal sums to vanish") {
  KeyLemmaHypotheses h;
  h.n = 2;
  h.c = 0.6;
  h.delta0 = 0.6;
  h.C0 = 1.0;
  h.beta = 0.3;
  const auto s = find_passing_bound(h, 60);
  REQUIRE(s.K.has_value());
  CHECK(s.last.passed);
}

TEST_CASE("K below the lambda floor fails immediately") {
  KeyLemmaHypotheses h;
  h.n = 2;
  h.c = 2.0;
  h.delta0 = 0.5;
  h.C0 = 1.0;
  const double K = 1.0 - h.delta() / 2.0;
  const auto r = key_c0_verify(h, K, 50);
  CHECK_FALSE(r.passed);
  REQUIRE(r.counterexample.has_value());
  CHECK(r.counterexample->kind == KeyLemmaWitness::Kind::LambdaExceeds);
  CHECK(*std::max_element(r.counterexample->lambda.begin(), r.counterexample->lambda.end()) > K);
}

TEST_CASE("input validation") {
  KeyLemmaHypotheses h;
  CHECK_THROWS_AS(key_c0_verify(h, 0.0, 10), ValidationError);
  CHECK_THROWS_AS(key_c0_verify(h, -1.0, 10), ValidationError);
  h.delta0 = 2.0 * h.c;
  CHECK_THROWS_AS(key_c0_verify(h, 10.0, 10), ValidationError);
}

TEST_CASE("delta0 >= 1 is accepted but flagged") {
  KeyLemmaHypotheses h;
  h.n = 2;
  h.c = 3.0;
  h.delta0 = 1.5;
  h.C0 = 1.0;
  const auto s = find_passing_bound(h, 40);
  REQUIRE(s.K.has_value());
  CHECK(s.last.outside_stated_hypotheses);
  h.delta0 = 0.5;
  CHECK_FALSE(key_c0_verify(h, 100.0, 20).outside_stated_hypotheses);
}

TEST_CASE("reduced search agrees with full enumeration") {
  Rng rng(21);
  int fails = 0, passes = 0;
  for (int trial = 0; trial < 40; ++trial) {
    KeyLemmaHypotheses h;
    h.n = rng.integer(1, 2);
    h.c = rng.uniform(0.3, 3.0);
    h.delta0 = rng.uniform(0.05, std::min(h.c, 0.95));
    h.C0 = rng.uniform(0.1, 3.0);
    h.beta = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 1.0);
    const double K0 = default_key_bound(h);
    for (double scale : {0.02, 0.2, 1.0}) {
      const int res = h.n == 1 ? 40 : 9;
      const auto a = key_c0_verify(h, K0 * scale, res);
      const auto b = key_c0_verify_exhaustive(h, K0 * scale, res);
      CHECK(a.passed == b.passed);
      (a.passed ? passes : fails) += 1;
    }
  }
  CHECK(passes > 0);
  CHECK(fails > 0);
}

TEST_CASE("finite K exists for random admissible triples") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    KeyLemmaHypotheses h;
    h.n = rng.integer(1, 2);
    h.c = rng.uniform(0.3, 4.0);
    h.delta0 = rng.uniform(0.05, std::min(h.c, 0.95));
    h.C0 = rng.uniform(0.1, 4.0);
    h.beta = rng.uniform(0.0, 1.0);
    const auto s = find_passing_bound(h, 40);
    CHECK(s.K.has_value());
  }
}

TEST_CASE("dropping the cone condition exposes unbounded lambda") {
  KeyLemmaHypotheses h;
  h.n = 2;
  h.c = 1.0;
  h.delta0 = 0.5;
  h.C0 = 3.0;
  h.enforce_cone = false;
  const auto s = find_passing_bound(h, 40, 8);
  CHECK_FALSE(s.K.has_value());
  REQUIRE(s.last.counterexample.has_value());
  CHECK(s.last.counterexample->kind == KeyLemmaWitness::Kind::LambdaExceeds);
  CHECK_FALSE(s.last.counterexample->describe().empty());
}

TEST_CASE("custom decay term") {
  KeyLemmaHypotheses h;
  h.n = 1;
  h.c = 1.0;
  h.delta0 = 0.4;
  h.C0 = 0.6;
  h.f = [](std::span<const double> l) { return 0.2 / (1.0 + l[0] * l[0]); };
  const auto a = key_c0_verify(h, 1000.0, 60);
  const auto b = key_c0_verify_exhaustive(h, 1000.0, 60);
  CHECK(a.passed == b.passed);
  CHECK(a.points_examined == b.points_examined);
}
