#pragma once

// Flat Kahler torus under the real symmetry reduction: fields depend only on
// the real parts x_1..x_n of the complex coordinates, so i d dbar phi becomes
// (1/4) * Hess(phi) and every (1,1)-form is a symmetric matrix field on the
// real n-torus. The reference metric omega is the identity field.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tjflow/field.hpp"

namespace tjflow {

/// Reduced i d dbar of a potential.
FormField reduced_hessian(const PotentialField& phi);

struct MetricField {
  FormField G;
  double min_eigenvalue;  ///< positivity margin of omega_phi over the grid
  std::size_t argmin;
};

/// omega_phi = identity + reduced_hessian(phi), with its positivity margin.
MetricField omega_phi(const PotentialField& phi);

/// One cosine term of a band-limited potential.
/// Plane:   amplitude * cos(2 pi k.x + phase)
/// Product: amplitude * prod_d cos(2 pi k_d x_d + phase)
struct CosineMode {
  enum class Kind { Plane, Product };
  Kind kind = Kind::Plane;
  double amplitude = 0.0;
  std::vector<int> k;
  double phase = 0.0;
};

/// Samples a sum of cosine modes; rejects wavenumbers at or beyond Nyquist.
PotentialField sample_modes(const Grid& grid, const std::vector<CosineMode>& modes);

/// A vanishing locus made of coordinate hyperplanes {x_axis = value} and points.
struct Locus {
  struct Hyperplane {
    int axis;
    double value;
  };
  std::vector<Hyperplane> hyperplanes;
  std::vector<std::vector<double>> points;

  /// Flat torus distance from x to the nearest component. +inf when empty.
  double distance(const std::array<double, 3>& x, int n) const;
  bool empty() const noexcept { return hyperplanes.empty() && points.empty(); }
};

/// Lower bound theta >= C0 * dist(x, D)^(2 gamma) * omega.
struct Degeneracy {
  Locus locus;
  double gamma = 1.0;
  double C0 = 0.0;  ///< 0 means "compute the best constant from the grid"
};

/// theta = theta0 + reduced_hessian(psi), optionally degenerate on a locus.
struct ThetaSpec {
  Eigen::MatrixXd theta0;
  PotentialField psi;
  std::optional<Degeneracy> degeneracy;

  FormField realize() const;
};

struct ThetaValidation {
  double min_eigenvalue;
  std::size_t argmin;
  bool semipositive;
  /// Best C0 with min-eig(theta) >= C0 dist^(2 gamma) off the locus.
  std::optional<double> degeneracy_constant;
  bool degeneracy_ok = true;
  std::size_t degeneracy_worst_point = 0;
  std::vector<std::string> warnings;
};

/// Checks semi-positivity (>= -1e-10) and, when declared, the degeneracy bound.
ThetaValidation validate_theta(const ThetaSpec& theta);

/// n * mean(theta ^ omega^(n-1)) / mean(omega^n) + beta, by grid quadrature.
double cohomology_constant(const FormField& theta, double beta);
double cohomology_constant(const ThetaSpec& theta, double beta);

struct WedgeQuotients {
  std::vector<double> trace;         ///< tr_{omega_phi} theta = tr(G^-1 Theta)
  std::vector<double> volume_ratio;  ///< omega^n / omega_phi^n = 1 / det G
};

/// Throws PositivityViolation (with grid location) if G is singular somewhere.
WedgeQuotients wedge_quotients(const FormField& G, const FormField& Theta);

struct SubsolutionReport {
  double margin;  ///< grid minimum of min_k (c - sum_{j != k} nu_j)
  std::size_t argmin;
  double c_beta;
  bool holds() const noexcept { return margin > 0.0; }
};

/// Pointwise check of (c omega_hat - (n-1) theta) ^ omega_hat^(n-2) > 0 in
/// eigenvalue form, nu being theta's eigenvalues relative to omega_hat.
SubsolutionReport subsolution_check(const PotentialField& candidate, const FormField& theta,
                                    double c_beta);

/// n = 2 example: theta = diag(t1 (1 - cos 2 pi x1), t2), degenerate along
/// {x1 = 0} with gamma = 1.
ThetaSpec degenerate_theta_example(const Grid& grid, double t1, double t2);

/// Fixed data of a run.
struct GeometrySetup {
  Grid grid;
  ThetaSpec theta;
  FormField theta_field;
  double beta;
  double c_beta;
  double epsilon0 = 0.0;
  std::optional<PotentialField> subsolution;
  ThetaValidation validation;

  /// Validates theta (throws ValidationError when not semi-positive, when a
  /// declared degeneracy bound fails, or when a given subsolution has no
  /// positive margin) and derives c_beta.
  static GeometrySetup make(ThetaSpec theta, double beta, double epsilon0 = 0.0,
                            std::optional<PotentialField> subsolution = std::nullopt);

  /// theta + epsilon * omega.
  FormField theta_epsilon(double epsilon) const;
  /// c_beta for theta_epsilon.
  double c_epsilon(double epsilon) const;
};

}  // namespace tjflow
