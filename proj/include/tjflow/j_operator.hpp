#pragma once

// Grid evaluation of the operator
//
//     u  ->  psi - tr_{omega_u} theta - rho * omega^n / omega_u^n
//
// which is the flow speed of the twisted J-flow (psi = c_beta, rho = beta) and
// the residual of the generalised inverse sigma_{n-1} equation. Also exposes
// its linearisation, a second-order operator with coefficient field
// G^{-1} Theta G^{-1} + (rho / det G) G^{-1} acting on the reduced Hessian.

#include <span>
#include <vector>

#include "tjflow/field.hpp"

namespace tjflow {

struct OperatorEvaluation {
  explicit OperatorEvaluation(const Grid& grid)
      : hessian(grid), value(grid.size()), det(grid.size()) {}

  FormField hessian;          ///< reduced Hessian of u; omega_u = I + hessian
  std::vector<double> value;  ///< operator value per grid point
  std::vector<double> det;    ///< det(omega_u) / det(omega)
  double min_eigenvalue = 0;  ///< positivity margin of omega_u
};

class JOperator {
 public:
  JOperator(FormField theta, std::vector<double> psi, std::vector<double> rho);

  /// psi = c, rho = beta everywhere.
  static JOperator twisted(FormField theta, double c, double beta);

  const Grid& grid() const noexcept { return theta_.grid(); }
  const FormField& theta() const noexcept { return theta_; }
  std::span<const double> psi() const noexcept { return psi_; }
  std::span<const double> rho() const noexcept { return rho_; }

  /// Fills every member of out. Non-positive metrics are reported through
  /// out.min_eigenvalue; values there are meaningless but finite-or-not.
  void evaluate(std::span<const double> u, OperatorEvaluation& out) const;

  /// Coefficient field of the linearisation at omega_u = I + hessian.
  void coefficients(const FormField& hessian, FormField& out) const;

  /// out = sum_{jk} C_jk * hessian(delta)_jk.
  void apply_linearization(const FormField& coeff, std::span<const double> delta,
                           FormField& scratch, std::span<double> out) const;

 private:
  FormField theta_;
  std::vector<double> psi_;
  std::vector<double> rho_;
};

/// Location of the smallest eigenvalue of I + hessian (used for diagnostics
/// after a kernel reported a positivity failure).
FormField::Extremum metric_min_eigenvalue(const FormField& hessian);

}  // namespace tjflow
