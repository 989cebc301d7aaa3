#include "tjflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tjflow/errors.hpp"
#include "tjflow/pointwise.hpp"
#include "tjflow/spectral.hpp"

namespace tjflow {

FormField reduced_hessian(const PotentialField& phi) {
  return SpectralOps::for_grid(phi.grid()).reduced_hessian(phi.values());
}

MetricField omega_phi(const PotentialField& phi) {
  FormField G = reduced_hessian(phi);
  G.add_identity(1.0);
  const auto e = G.min_eigenvalue();
  return {std::move(G), e.value, e.point};
}

PotentialField sample_modes(const Grid& grid, const std::vector<CosineMode>& modes) {
  const int n = grid.dim();
  const int N = grid.points_per_axis();
  for (const auto& m : modes) {
    if (static_cast<int>(m.k.size()) != n) {
      throw ValidationError("cosine mode: wavevector has " + std::to_string(m.k.size()) +
                            " entries, grid dimension is " + std::to_string(n));
    }
    for (int kd : m.k) {
      if (std::abs(kd) >= N / 2) {
        throw ValidationError("cosine mode: wavenumber " + std::to_string(kd) +
                              " is not resolved below Nyquist at N=" + std::to_string(N));
      }
    }
  }
  PotentialField out(grid);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto x = grid.coordinates(p);
    double v = 0.0;
    for (const auto& m : modes) {
      if (m.kind == CosineMode::Kind::Plane) {
        double arg = m.phase;
        for (int d = 0; d < n; ++d) arg += two_pi * m.k[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
        v += m.amplitude * std::cos(arg);
      } else {
        double prod = m.amplitude;
        for (int d = 0; d < n; ++d) {
          prod *= std::cos(two_pi * m.k[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)] + m.phase);
        }
        v += prod;
      }
    }
    out[p] = v;
  }
  return out;
}

namespace {
double periodic_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 1.0);
  return std::min(d, 1.0 - d);
}
}  // namespace

double Locus::distance(const std::array<double, 3>& x, int n) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : hyperplanes) {
    best = std::min(best, periodic_gap(x[static_cast<std::size_t>(h.axis)], h.value));
  }
  for (const auto& p : points) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) {
      const double g = periodic_gap(x[static_cast<std::size_t>(d)], p[static_cast<std::size_t>(d)]);
      s += g * g;
    }
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

FormField ThetaSpec::realize() const {
  FormField f = reduced_hessian(psi);
  f += FormField::constant(psi.grid(), theta0);
  return f;
}

ThetaValidation validate_theta(const ThetaSpec& theta) {
  const Grid& grid = theta.psi.grid();
  const int n = grid.dim();
  if (theta.theta0.rows() != n || theta.theta0.cols() != n) {
    throw ValidationError("theta0 must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if ((theta.theta0 - theta.theta0.transpose()).cwiseAbs().maxCoeff() > 1e-14) {
    throw ValidationError("theta0 must be symmetric");
  }
  const FormField field = theta.realize();
  const auto lo = field.min_eigenvalue();
  ThetaValidation v{lo.value, lo.point, lo.value >= -kPositivityTol, std::nullopt, true, 0, {}};

  if (theta.theta0.trace() <= kPositivityTol) {
    v.warnings.push_back(
        "degenerate class: integral of theta ^ omega^(n-1) vanishes (trace(theta0) = " +
        std::to_string(theta.theta0.trace()) + ")");
  }

  if (theta.degeneracy) {
    const Degeneracy& deg = *theta.degeneracy;
    if (deg.locus.empty()) throw ValidationError("degeneracy declared with an empty locus");
    if (!(deg.gamma > 0.0)) throw ValidationError("degeneracy exponent gamma must be positive");
    double best = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    bool ok = true;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double d = deg.locus.distance(grid.coordinates(p), n);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(field.at(p), Eigen::EigenvaluesOnly);
      const double m = eig.eigenvalues()(0);
      const double bound = std::pow(d, 2.0 * deg.gamma);
      if (d > 1e-12) {
        const double ratio = m / bound;
        if (ratio < best) {
          best = ratio;
          worst = p;
        }
      }
      if (deg.C0 > 0.0 && m < deg.C0 * bound - kPositivityTol) {
        if (ok) v.degeneracy_worst_point = p;
        ok = false;
      }
    }
    v.degeneracy_constant = best;
    if (deg.C0 > 0.0) {
      v.degeneracy_ok = ok;
    } else {
      v.degeneracy_ok = best > 0.0;
      v.degeneracy_worst_point = worst;
    }
  }
  return v;
}

double cohomology_constant(const FormField& theta, double beta) {
  // n theta ^ omega^(n-1) / omega^n = tr(theta); omega^n / omega^n = 1.
  const int n = theta.dim();
  const std::size_t count = theta.grid().size();
  // Neumaier summation keeps constant fields exact.
  double num = 0.0, carry = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    double tr = 0.0;
    for (int j = 0; j < n; ++j) tr += theta.plane(j, j)[p];
    const double t = num + tr;
    carry += std::abs(num) >= std::abs(tr) ? (num - t) + tr : (tr - t) + num;
    num = t;
  }
  num += carry;
  const double volume = static_cast<double>(count);
  return num / volume + beta;
}

double cohomology_constant(const ThetaSpec& theta, double beta) {
  return cohomology_constant(theta.realize(), beta);
}

WedgeQuotients wedge_quotients(const FormField& G, const FormField& Theta) {
  if (!(G.grid() == Theta.grid())) throw ValidationError("wedge_quotients: grid mismatch");
  const std::size_t count = G.grid().size();
  WedgeQuotients out{std::vector<double>(count), std::vector<double>(count)};
  for (std::size_t p = 0; p < count; ++p) {
    const Eigen::MatrixXd g = G.at(p);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    const double det = g.determinant();
    if (ldlt.info() != Eigen::Success || !(det > 0.0) || !ldlt.isPositive()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
      throw PositivityViolation("wedge_quotients: omega_phi singular at grid point " +
                                    std::to_string(p),
                                eig.eigenvalues()(0), p);
    }
    out.trace[p] = ldlt.solve(Theta.at(p)).trace();
    out.volume_ratio[p] = 1.0 / det;
  }
  return out;
}

SubsolutionReport subsolution_check(const PotentialField& candidate, const FormField& theta,
                                    double c_beta) {
  const MetricField hat = omega_phi(candidate);
  if (!(hat.min_eigenvalue > kPositivityTol)) {
    throw PositivityViolation("subsolution_check: candidate metric is not positive",
                              hat.min_eigenvalue, hat.argmin);
  }
  SubsolutionReport r{std::numeric_limits<double>::infinity(), 0, c_beta};
  for (std::size_t p = 0; p < candidate.size(); ++p) {
    const auto nu = relative_eigenvalues(hat.G.at(p), theta.at(p));
    const double m = cone_margin(nu, c_beta);
    if (m < r.margin) {
      r.margin = m;
      r.argmin = p;
    }
  }
  return r;
}

ThetaSpec degenerate_theta_example(const Grid& grid, double t1, double t2) {
  if (grid.dim() != 2) throw ValidationError("degenerate_theta_example: requires n = 2");
  if (!(t1 > 0.0) || !(t2 > 0.0)) {
    throw ValidationError("degenerate_theta_example: t1 and t2 must be positive");
  }
  const double amplitude = 4.0 * t1 / ((2.0 * std::numbers::pi) * (2.0 * std::numbers::pi));
  CosineMode mode{CosineMode::Kind::Plane, amplitude, {1, 0}, 0.0};
  Eigen::MatrixXd theta0 = Eigen::MatrixXd::Zero(2, 2);
  theta0(0, 0) = t1;
  theta0(1, 1) = t2;
  Degeneracy deg;
  deg.locus.hyperplanes.push_back({0, 0.0});
  deg.gamma = 1.0;
  ThetaSpec spec{theta0, sample_modes(grid, {mode}), deg};
  const auto v = validate_theta(spec);
  spec.degeneracy->C0 = *v.degeneracy_constant;
  return spec;
}

GeometrySetup GeometrySetup::make(ThetaSpec theta, double beta, double epsilon0,
                                  std::optional<PotentialField> subsolution) {
  if (!(beta >= 0.0)) throw ValidationError("beta must be non-negative");
  if (!(epsilon0 >= 0.0)) throw ValidationError("epsilon0 must be non-negative");
  ThetaValidation v = validate_theta(theta);
  const Grid& grid = theta.psi.grid();
  if (!v.semipositive) {
    const auto x = grid.coordinates(v.argmin);
    throw ValidationError("theta is not semi-positive: min eigenvalue " +
                          std::to_string(v.min_eigenvalue) + " at x=(" + std::to_string(x[0]) +
                          "," + std::to_string(x[1]) + ")");
  }
  if (!v.degeneracy_ok) {
    const auto x = grid.coordinates(v.degeneracy_worst_point);
    throw ValidationError("theta violates the declared degeneracy bound at x=(" +
                          std::to_string(x[0]) + "," + std::to_string(x[1]) + ")");
  }
  FormField field = theta.realize();
  const double c = cohomology_constant(field, beta);
  if (subsolution) {
    if (!(subsolution->grid() == grid)) throw ValidationError("subsolution grid mismatch");
    const auto rep = subsolution_check(*subsolution, field, c);
    if (!rep.holds()) {
      throw ValidationError("subsolution candidate fails the cone condition: margin " +
                            std::to_string(rep.margin));
    }
  }
  return GeometrySetup{grid,     std::move(theta), std::move(field), beta, c,
                       epsilon0, std::move(subsolution), std::move(v)};
}

FormField GeometrySetup::theta_epsilon(double epsilon) const {
  FormField f = theta_field;
  if (epsilon != 0.0) f.add_identity(epsilon);
  return f;
}

double GeometrySetup::c_epsilon(double epsilon) const {
  return cohomology_constant(theta_epsilon(epsilon), beta);
}

}  // namespace tjflow
