#pragma once

// Energy functionals on the reduced torus, evaluated by grid quadrature.
//
// Normalisation: the volume form omega^n / n! integrates to 1, so for a top
// form a,  integral(a) = n! * mean(a / omega^n). Mixed wedge products become
// mixed discriminants: theta ^ omega^k ^ omega_phi^(n-1-k) / omega^n equals
// D(Theta, I x k, G x (n-1-k)) with D(A, ..., A) = det A.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tjflow/field.hpp"

namespace tjflow {

/// Mixed discriminant of n symmetric n x n matrices (polarisation formula).
double mixed_discriminant(std::span<const Eigen::MatrixXd> matrices);

struct FunctionalReport {
  /// (1/(n+1)!) sum_k integral phi omega^k ^ omega_phi^(n-k); the quantity
  /// conserved by the flow. E(phi + C) = E(phi) + C.
  double I = 0.0;
  /// (1/n!) integral phi (omega^n - omega_phi^n); the variant entering the
  /// comparison (1/n) J <= I - J <= n J.
  double I_difference = 0.0;
  double J = 0.0;          ///< Aubin J
  double J_theta = 0.0;    ///< J^theta_omega
  double J_twisted = 0.0;  ///< J^theta_omega + beta J
  double entropy = 0.0;    ///< integral log(omega_phi^n / omega^n) omega_phi^n / n!
  double theta_bar = 0.0;  ///< n [theta].[omega]^(n-1) / [omega]^n
  /// Full Mabuchi energy. Ric(omega) = 0 on the flat torus, so the
  /// pluripotential part J^{-Ric} vanishes and this equals the entropy.
  double mabuchi = 0.0;
};

/// Evaluates every functional at phi. theta is the realised form field.
/// Throws PositivityViolation if omega_phi is not semi-positive (and, for the
/// entropy, if det omega_phi <= 0 anywhere).
FunctionalReport evaluate_functionals(const PotentialField& phi, const FormField& theta,
                                      double beta);

/// Same, reusing an already computed reduced Hessian of phi.
FunctionalReport evaluate_functionals(const PotentialField& phi, const FormField& hessian,
                                      const FormField& theta, double beta);

double aubin_I(const PotentialField& phi);
double aubin_I_difference(const PotentialField& phi);
double aubin_J(const PotentialField& phi);
double twisted_J(const PotentialField& phi, const FormField& theta, double beta);
double mabuchi_entropy(const PotentialField& phi);

/// Shifts phi by the constant making I(phi) = 0.
PotentialField energy_normalized(const PotentialField& phi);

/// integral v * s * omega_phi^n / n! = mean(v * s * det G).
double weighted_pairing(std::span<const double> v, std::span<const double> s,
                        std::span<const double> det);

/// One recorded sample of a flow trajectory, enough to check the energy
/// identity d/dt J = - integral (d_t phi)^2 omega_phi^n / n!.
struct EnergySample {
  double t;
  double J_twisted;
  double dissipation;  ///< integral (d_t phi)^2 omega_phi^n / n!
};

struct MonotonicityReport {
  bool monotone = true;
  double worst_increase = 0.0;  ///< largest J(t_{i+1}) - J(t_i)
  bool identity_ok = true;
  double worst_relative_error = 0.0;
  std::size_t identity_checks = 0;
  double final_value = 0.0;
  double min_value = 0.0;
};

/// Checks non-increase of J within monotone_tol per step, and matches the
/// centred (non-uniform) time difference of J against -dissipation within
/// relative_tol wherever |dJ/dt| exceeds derivative_floor.
MonotonicityReport flow_monotonicity_check(std::span<const EnergySample> samples,
                                           double monotone_tol = 1e-10,
                                           double relative_tol = 1e-3,
                                           double derivative_floor = 1e-8);

}  // namespace tjflow
