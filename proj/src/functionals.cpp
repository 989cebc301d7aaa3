#include "tjflow/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tjflow/errors.hpp"
#include "tjflow/geometry.hpp"
#include "tjflow/pointwise.hpp"

namespace tjflow {

double mixed_discriminant(std::span<const Eigen::MatrixXd> matrices) {
  const std::size_t n = matrices.size();
  if (n == 0) return 1.0;
  const auto dim = matrices[0].rows();
  if (static_cast<std::size_t>(dim) != n) {
    throw ValidationError("mixed_discriminant: need n matrices of size n x n");
  }
  double total = 0.0;
  double factorial = 1.0;
  for (std::size_t i = 2; i <= n; ++i) factorial *= static_cast<double>(i);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
    int bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum += matrices[i];
        ++bits;
      }
    }
    const double sign = ((static_cast<int>(n) - bits) % 2 == 0) ? 1.0 : -1.0;
    total += sign * sum.determinant();
  }
  return total / factorial;
}

namespace {

struct PointTerms {
  double det;
  double energy_sum;  // sum_{k=0}^n D(I^k, G^{n-k})
  double theta_sum;   // sum_{k=0}^{n-1} D(Theta, I^k, G^{n-1-k})
};

PointTerms point_terms(const FormField& hessian, const FormField* theta, std::size_t p) {
  const int n = hessian.dim();
  if (n == 2) {
    const double g11 = 1.0 + hessian.plane(0, 0)[p];
    const double g12 = hessian.plane(0, 1)[p];
    const double g22 = 1.0 + hessian.plane(1, 1)[p];
    const double det = g11 * g22 - g12 * g12;
    PointTerms t{det, det + 0.5 * (g11 + g22) + 1.0, 0.0};
    if (theta) {
      const double a = theta->plane(0, 0)[p], b = theta->plane(0, 1)[p],
                   d = theta->plane(1, 1)[p];
      t.theta_sum = 0.5 * (a * g22 + d * g11 - 2.0 * b * g12) + 0.5 * (a + d);
    }
    return t;
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd G = hessian.at(p);
  G += I;
  PointTerms t{G.determinant(), 0.0, 0.0};
  std::vector<Eigen::MatrixXd> mats(static_cast<std::size_t>(n));
  for (int k = 0; k <= n; ++k) {
    for (int i = 0; i < n; ++i) mats[static_cast<std::size_t>(i)] = (i < k) ? I : G;
    t.energy_sum += mixed_discriminant(mats);
  }
  if (theta) {
    const Eigen::MatrixXd Th = theta->at(p);
    for (int k = 0; k <= n - 1; ++k) {
      mats[0] = Th;
      for (int i = 1; i < n; ++i) mats[static_cast<std::size_t>(i)] = (i <= k) ? I : G;
      t.theta_sum += mixed_discriminant(mats);
    }
  }
  return t;
}

void require_semipositive(const FormField& hessian) {
  FormField g = hessian;
  g.add_identity(1.0);
  const auto e = g.min_eigenvalue();
  if (e.value < -kPositivityTol) {
    throw PositivityViolation("functionals: omega_phi is not semi-positive at grid point " +
                                  std::to_string(e.point),
                              e.value, e.point);
  }
}

}  // namespace

FunctionalReport evaluate_functionals(const PotentialField& phi, const FormField& hessian,
                                      const FormField& theta, double beta) {
  require_semipositive(hessian);
  const int n = phi.grid().dim();
  const std::size_t count = phi.size();
  double mean_phi = 0.0, e_acc = 0.0, t_acc = 0.0, diff_acc = 0.0, ent_acc = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    const PointTerms t = point_terms(hessian, &theta, p);
    const double v = phi[p];
    mean_phi += v;
    e_acc += v * t.energy_sum;
    t_acc += v * t.theta_sum;
    diff_acc += v * (1.0 - t.det);
    if (!(t.det > 0.0)) {
      throw PositivityViolation("mabuchi_entropy: det omega_phi <= 0 at grid point " +
                                    std::to_string(p),
                                t.det, p);
    }
    ent_acc += t.det * std::log(t.det);
  }
  const double vol = static_cast<double>(count);
  FunctionalReport r;
  r.theta_bar = cohomology_constant(theta, 0.0);
  r.I = e_acc / vol / (n + 1);
  r.I_difference = diff_acc / vol;
  r.J = mean_phi / vol - r.I;
  r.J_theta = t_acc / vol - r.theta_bar / (n + 1) * (e_acc / vol);
  r.J_twisted = r.J_theta + beta * r.J;
  r.entropy = ent_acc / vol;
  r.mabuchi = r.entropy;
  return r;
}

FunctionalReport evaluate_functionals(const PotentialField& phi, const FormField& theta,
                                      double beta) {
  return evaluate_functionals(phi, reduced_hessian(phi), theta, beta);
}

namespace {
// I, I_difference and J without theta or the entropy's det > 0 requirement.
struct AubinParts {
  double I, I_difference, J;
};

AubinParts aubin_parts(const PotentialField& phi) {
  const FormField H = reduced_hessian(phi);
  require_semipositive(H);
  const int n = phi.grid().dim();
  double mean_phi = 0.0, e_acc = 0.0, diff_acc = 0.0;
  for (std::size_t p = 0; p < phi.size(); ++p) {
    const PointTerms t = point_terms(H, nullptr, p);
    mean_phi += phi[p];
    e_acc += phi[p] * t.energy_sum;
    diff_acc += phi[p] * (1.0 - t.det);
  }
  const double vol = static_cast<double>(phi.size());
  const double I = e_acc / vol / (n + 1);
  return {I, diff_acc / vol, mean_phi / vol - I};
}
}  // namespace

double aubin_I(const PotentialField& phi) { return aubin_parts(phi).I; }
double aubin_I_difference(const PotentialField& phi) { return aubin_parts(phi).I_difference; }
double aubin_J(const PotentialField& phi) { return aubin_parts(phi).J; }

double twisted_J(const PotentialField& phi, const FormField& theta, double beta) {
  return evaluate_functionals(phi, theta, beta).J_twisted;
}

double mabuchi_entropy(const PotentialField& phi) {
  const FormField H = reduced_hessian(phi);
  double acc = 0.0;
  for (std::size_t p = 0; p < phi.size(); ++p) {
    const double det = point_terms(H, nullptr, p).det;
    if (!(det > 0.0)) {
      throw PositivityViolation("mabuchi_entropy: det omega_phi <= 0 at grid point " +
                                    std::to_string(p),
                                det, p);
    }
    acc += det * std::log(det);
  }
  return acc / static_cast<double>(phi.size());
}

PotentialField energy_normalized(const PotentialField& phi) {
  PotentialField out = phi;
  out += -aubin_I(phi);
  return out;
}

double weighted_pairing(std::span<const double> v, std::span<const double> s,
                        std::span<const double> det) {
  double acc = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) acc += v[p] * s[p] * det[p];
  return acc / static_cast<double>(v.size());
}

MonotonicityReport flow_monotonicity_check(std::span<const EnergySample> samples,
                                           double monotone_tol, double relative_tol,
                                           double derivative_floor) {
  MonotonicityReport r;
  if (samples.empty()) return r;
  r.final_value = samples.back().J_twisted;
  r.min_value = samples.front().J_twisted;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    r.min_value = std::min(r.min_value, samples[i].J_twisted);
    if (i + 1 < samples.size()) {
      const double inc = samples[i + 1].J_twisted - samples[i].J_twisted;
      r.worst_increase = std::max(r.worst_increase, inc);
      if (inc > monotone_tol) r.monotone = false;
    }
    if (i == 0 || i + 1 == samples.size()) continue;
    // Three-point derivative on a non-uniform mesh.
    const double h0 = samples[i].t - samples[i - 1].t;
    const double h1 = samples[i + 1].t - samples[i].t;
    if (!(h0 > 0.0) || !(h1 > 0.0)) continue;
    const double d = -h1 / (h0 * (h0 + h1)) * samples[i - 1].J_twisted +
                     (h1 - h0) / (h0 * h1) * samples[i].J_twisted +
                     h0 / (h1 * (h0 + h1)) * samples[i + 1].J_twisted;
    if (std::abs(d) <= derivative_floor) continue;
    const double expected = -samples[i].dissipation;
    const double rel = std::abs(d - expected) / std::abs(expected);
    ++r.identity_checks;
    r.worst_relative_error = std::max(r.worst_relative_error, rel);
    if (rel > relative_tol) r.identity_ok = false;
  }
  return r;
}

}  // namespace tjflow
