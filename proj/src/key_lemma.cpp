#include "tjflow/key_lemma.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tjflow/errors.hpp"

namespace tjflow {

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    v[static_cast<std::size_t>(i)] =
        (count == 1) ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  }
  return v;
}

std::vector<double> geomspace(double lo, double hi, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) {
    v[static_cast<std::size_t>(i)] =
        (count == 1) ? lo : std::exp(a + (b - a) * static_cast<double>(i) / (count - 1));
  }
  v.front() = lo;
  return v;
}

// Advances a mixed-radix counter; false once it wraps.
bool next_index(std::vector<int>& idx, int radix) {
  for (std::size_t d = 0; d < idx.size(); ++d) {
    if (++idx[d] < radix) return true;
    idx[d] = 0;
  }
  return false;
}

struct SearchGrid {
  std::vector<double> mu_axis;
  std::vector<double> lambda_axis;
  double delta;
};

void validate(const KeyLemmaHypotheses& h, double K, int resolution) {
  if (!(K > 0.0)) throw ValidationError("key_c0_verify: K_candidate must be positive");
  if (resolution < 2) throw ValidationError("key_c0_verify: resolution must be >= 2");
  if (h.n < 1) throw ValidationError("key_c0_verify: n must be >= 1");
  if (!(h.c > 0.0) || !(h.delta0 > 0.0) || !(h.C0 > 0.0)) {
    throw ValidationError("key_c0_verify: c, delta0 and C0 must be positive");
  }
  if (h.enforce_cone && h.delta0 > h.c) {
    throw ValidationError("key_c0_verify: delta0 must not exceed c");
  }
  if (h.beta < 0.0) throw ValidationError("key_c0_verify: beta must be non-negative");
}

SearchGrid make_grid(const KeyLemmaHypotheses& h, double K, int resolution) {
  SearchGrid g;
  g.delta = h.delta();
  // With the cone enforced and n >= 2 every single mu_j is at most c - delta0.
  const double mu_hi =
      (h.enforce_cone && h.n >= 2) ? std::min(h.C0, h.c - h.delta0) : h.C0;
  g.mu_axis = linspace(0.0, mu_hi, resolution);
  const double floor = 1.0 - g.delta;
  g.lambda_axis = geomspace(floor, std::max(10.0 * K, 10.0 * floor), resolution);
  return g;
}

bool cone_ok(const KeyLemmaHypotheses& h, std::span<const double> mu) {
  if (!h.enforce_cone) return true;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    double others = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (j != k) others += mu[j];
    }
    if (h.c - others < h.delta0) return false;
  }
  return true;
}

double tau_of(const KeyLemmaHypotheses& h, std::span<const double> mu,
              std::span<const double> lambda) {
  double s = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) s += mu[k] / lambda[k];
  return s + h.decay(lambda) - h.c;
}

KeyLemmaReport base_report(const KeyLemmaHypotheses& h, const SearchGrid& g, double K,
                           int resolution) {
  KeyLemmaReport r;
  r.K = K;
  r.resolution = resolution;
  r.delta = g.delta;
  r.lambda_search_max = g.lambda_axis.back();
  r.outside_stated_hypotheses = h.delta0 >= 1.0;
  return r;
}

// Classifies an admissible point; returns a witness when it violates K.
std::optional<KeyLemmaWitness> check_point(std::span<const double> mu,
                                           std::span<const double> lambda, double tau,
                                           double K) {
  if (std::abs(tau) > K) {
    return KeyLemmaWitness{KeyLemmaWitness::Kind::TauExceeds,
                           {mu.begin(), mu.end()},
                           {lambda.begin(), lambda.end()},
                           tau};
  }
  for (double l : lambda) {
    if (l > K) {
      return KeyLemmaWitness{KeyLemmaWitness::Kind::LambdaExceeds,
                             {mu.begin(), mu.end()},
                             {lambda.begin(), lambda.end()},
                             tau};
    }
  }
  return std::nullopt;
}

}  // namespace

double KeyLemmaHypotheses::decay(std::span<const double> lambda) const {
  if (f) return f(lambda);
  double prod = 1.0;
  for (double l : lambda) prod *= l;
  return beta / prod;
}

std::string KeyLemmaWitness::describe() const {
  std::ostringstream os;
  os << (kind == Kind::TauExceeds ? "|tau| exceeds K" : "lambda exceeds K") << ": mu=(";
  for (std::size_t i = 0; i < mu.size(); ++i) os << (i ? "," : "") << mu[i];
  os << ") lambda=(";
  for (std::size_t i = 0; i < lambda.size(); ++i) os << (i ? "," : "") << lambda[i];
  os << ") tau=" << tau;
  return os.str();
}

double default_key_bound(const KeyLemmaHypotheses& h) noexcept {
  const double c = h.c;
  return std::max(c + h.n * h.C0 / h.delta0 * (4.0 * c + 4.0) / h.delta0, 2.0 * c);
}

KeyLemmaReport key_c0_verify(const KeyLemmaHypotheses& h, double K_candidate,
                             int resolution) {
  if (h.f) return key_c0_verify_exhaustive(h, K_candidate, resolution);
  validate(h, K_candidate, resolution);
  const SearchGrid g = make_grid(h, K_candidate, resolution);
  KeyLemmaReport report = base_report(h, g, K_candidate, resolution);

  const auto n = static_cast<std::size_t>(h.n);
  const double floor = g.lambda_axis.front();
  const auto above = std::upper_bound(g.lambda_axis.begin(), g.lambda_axis.end(), K_candidate);

  std::vector<int> idx(n, 0);
  std::vector<double> mu(n), lambda(n);
  do {
    for (std::size_t d = 0; d < n; ++d) mu[d] = g.mu_axis[static_cast<std::size_t>(idx[d])];
    if (!cone_ok(h, mu)) continue;

    std::fill(lambda.begin(), lambda.end(), floor);
    const double tau_floor = tau_of(h, mu, lambda);
    ++report.points_examined;
    if (tau_floor < -g.delta) continue;  // nothing admissible on this mu
    if (auto w = check_point(mu, lambda, tau_floor, K_candidate)) {
      report.counterexample = std::move(w);
      return report;
    }
    if (above == g.lambda_axis.end()) continue;
    for (std::size_t k = 0; k < n; ++k) {
      lambda[k] = *above;
      const double tau = tau_of(h, mu, lambda);
      ++report.points_examined;
      if (tau >= -g.delta) {
        report.counterexample = check_point(mu, lambda, tau, K_candidate);
        return report;
      }
      lambda[k] = floor;
    }
  } while (next_index(idx, resolution));

  report.passed = true;
  return report;
}

KeyLemmaReport key_c0_verify_exhaustive(const KeyLemmaHypotheses& h, double K_candidate,
                                        int resolution) {
  validate(h, K_candidate, resolution);
  const SearchGrid g = make_grid(h, K_candidate, resolution);
  KeyLemmaReport report = base_report(h, g, K_candidate, resolution);

  const auto n = static_cast<std::size_t>(h.n);
  std::vector<int> mu_idx(n, 0);
  std::vector<double> mu(n), lambda(n);
  do {
    for (std::size_t d = 0; d < n; ++d) mu[d] = g.mu_axis[static_cast<std::size_t>(mu_idx[d])];
    if (!cone_ok(h, mu)) continue;
    std::vector<int> l_idx(n, 0);
    do {
      for (std::size_t d = 0; d < n; ++d) {
        lambda[d] = g.lambda_axis[static_cast<std::size_t>(l_idx[d])];
      }
      const double tau = tau_of(h, mu, lambda);
      ++report.points_examined;
      if (tau < -g.delta) continue;
      if (auto w = check_point(mu, lambda, tau, K_candidate)) {
        report.counterexample = std::move(w);
        return report;
      }
    } while (next_index(l_idx, resolution));
  } while (next_index(mu_idx, resolution));

  report.passed = true;
  return report;
}

BoundSearch find_passing_bound(const KeyLemmaHypotheses& h, int resolution,
                               int max_doublings) {
  BoundSearch out;
  double K = default_key_bound(h);
  for (int i = 0; i <= max_doublings; ++i) {
    out.last = key_c0_verify(h, K, resolution);
    ++out.attempts;
    if (out.last.passed) {
      out.K = K;
      return out;
    }
    K *= 2.0;
  }
  return out;
}

}  // namespace tjflow
