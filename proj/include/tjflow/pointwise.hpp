#pragma once

// Pointwise algebra of the twisted J-flow written in eigenvalue form.
//
// In an omega-orthonormal frame that diagonalises omega_phi, the metric has
// eigenvalues lambda_k and theta has diagonal entries mu_k. The flow speed is
//
//     c_beta - sum_k mu_k / lambda_k - beta / (lambda_1 ... lambda_n)
//
// and the cone condition reads c_beta - sum_{j != k} mu_j >= delta0 for all k.

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tjflow {

/// Eigenvalues of omega_phi relative to omega. Entries are strictly positive
/// and stored non-increasing; ties keep their original relative order.
class Spectrum {
 public:
  /// Throws PositivityViolation if any entry is <= 0 (outside Gamma_n).
  explicit Spectrum(std::vector<double> lambda);

  std::span<const double> values() const noexcept { return lambda_; }
  std::size_t size() const noexcept { return lambda_.size(); }
  double operator[](std::size_t k) const { return lambda_[k]; }
  double product() const noexcept;
  double min() const noexcept { return lambda_.back(); }
  double max() const noexcept { return lambda_.front(); }

 private:
  std::vector<double> lambda_;
};

/// Diagonal entries of theta in the frame that diagonalises omega_phi.
/// Entry k pairs with Spectrum entry k.
class ThetaEigen {
 public:
  /// Non-negativity is not enforced here: theta may be merely symmetric.
  explicit ThetaEigen(std::vector<double> mu) : mu_(std::move(mu)) {}

  std::span<const double> values() const noexcept { return mu_; }
  std::size_t size() const noexcept { return mu_.size(); }
  double operator[](std::size_t k) const { return mu_[k]; }
  bool semipositive(double tol = 1e-10) const noexcept;

 private:
  std::vector<double> mu_;
};

/// Margin delta0 certified for a cohomological constant c_beta.
struct ConeCertificate {
  double delta0;
  double c_beta;

  /// Throws ValidationError unless 0 < delta0 <= c_beta.
  static ConeCertificate make(double delta0, double c_beta);
};

/// c_beta - sum_k mu_k/lambda_k - beta / prod(lambda).
double flow_speed(const Spectrum& lambda, const ThetaEigen& mu, double beta,
                  double c_beta);

/// Same, for unsorted raw arrays; rejects lambda_k <= 0.
double flow_speed(std::span<const double> lambda, std::span<const double> mu,
                  double beta, double c_beta);

/// min_k (c_beta - sum_{j != k} mu_j).
double cone_margin(std::span<const double> mu, double c_beta) noexcept;
inline double cone_margin(const ThetaEigen& mu, double c_beta) noexcept {
  return cone_margin(mu.values(), c_beta);
}

/// Eigendecomposes G (omega-orthonormal frame) and reads off theta's diagonal
/// in G's eigenbasis. For repeated eigenvalues of G the individual mu_k depend
/// on the eigenbasis the solver returns; sum_k mu_k/lambda_k does not.
/// Throws PositivityViolation when G is not positive definite (> 1e-10).
std::pair<Spectrum, ThetaEigen> simultaneous_frame(const Eigen::MatrixXd& G,
                                                   const Eigen::MatrixXd& Theta);

/// Eigenvalues of Gh^{-1/2} Theta Gh^{-1/2}, i.e. theta's eigenvalues measured
/// in a frame orthonormal for Gh. Sorted non-increasing.
std::vector<double> relative_eigenvalues(const Eigen::MatrixXd& Gh,
                                         const Eigen::MatrixXd& Theta);

/// Positive-definiteness floor shared by all modules.
inline constexpr double kPositivityTol = 1e-10;

}  // namespace tjflow
