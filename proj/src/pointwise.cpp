#include "tjflow/pointwise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tjflow/errors.hpp"

namespace tjflow {

Spectrum::Spectrum(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  if (lambda_.empty()) throw ValidationError("Spectrum: empty eigenvalue vector");
  for (double l : lambda_) {
    if (!(l > 0.0)) {
      throw PositivityViolation(
          "Spectrum: eigenvalue " + std::to_string(l) + " outside Gamma_n", l);
    }
  }
  std::stable_sort(lambda_.begin(), lambda_.end(), std::greater<>());
}

double Spectrum::product() const noexcept {
  return std::accumulate(lambda_.begin(), lambda_.end(), 1.0, std::multiplies<>());
}

bool ThetaEigen::semipositive(double tol) const noexcept {
  return std::all_of(mu_.begin(), mu_.end(), [tol](double m) { return m >= -tol; });
}

ConeCertificate ConeCertificate::make(double delta0, double c_beta) {
  if (!(delta0 > 0.0) || delta0 > c_beta) {
    throw ValidationError("ConeCertificate: need 0 < delta0 <= c_beta, got delta0=" +
                          std::to_string(delta0) + ", c_beta=" + std::to_string(c_beta));
  }
  return {delta0, c_beta};
}

double flow_speed(std::span<const double> lambda, std::span<const double> mu,
                  double beta, double c_beta) {
  if (lambda.size() != mu.size()) throw ValidationError("flow_speed: size mismatch");
  double trace = 0.0;
  double prod = 1.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] > 0.0)) {
      throw PositivityViolation("flow_speed: lambda outside Gamma_n", lambda[k]);
    }
    trace += mu[k] / lambda[k];
    prod *= lambda[k];
  }
  return c_beta - trace - beta / prod;
}

double flow_speed(const Spectrum& lambda, const ThetaEigen& mu, double beta,
                  double c_beta) {
  return flow_speed(lambda.values(), mu.values(), beta, c_beta);
}

double cone_margin(std::span<const double> mu, double c_beta) noexcept {
  // Each off-diagonal sum is accumulated directly; total - mu_k can cancel.
  double margin = c_beta;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    double others = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (j != k) others += mu[j];
    }
    margin = (k == 0) ? c_beta - others : std::min(margin, c_beta - others);
  }
  return margin;
}

std::pair<Spectrum, ThetaEigen> simultaneous_frame(const Eigen::MatrixXd& G,
                                                   const Eigen::MatrixXd& Theta) {
  const auto n = G.rows();
  if (G.cols() != n || Theta.rows() != n || Theta.cols() != n) {
    throw ValidationError("simultaneous_frame: shape mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  const Eigen::VectorXd& w = eig.eigenvalues();  // ascending
  if (!(w(0) > kPositivityTol)) {
    throw PositivityViolation("simultaneous_frame: G is not positive definite", w(0));
  }
  const Eigen::MatrixXd& V = eig.eigenvectors();
  // Pair (lambda_k, mu_k) then order by descending lambda; ties by solver index.
  std::vector<std::pair<double, double>> pairs(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXd e = V.col(k);
    pairs[static_cast<std::size_t>(k)] = {w(k), e.dot(Theta * e)};
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> lambda, mu;
  lambda.reserve(pairs.size());
  mu.reserve(pairs.size());
  for (const auto& [l, m] : pairs) {
    lambda.push_back(l);
    mu.push_back(m);
  }
  return {Spectrum(std::move(lambda)), ThetaEigen(std::move(mu))};
}

std::vector<double> relative_eigenvalues(const Eigen::MatrixXd& Gh,
                                         const Eigen::MatrixXd& Theta) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Theta, Gh);
  if (ges.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(Gh);
    throw PositivityViolation("relative_eigenvalues: reference metric not positive",
                              e.eigenvalues()(0));
  }
  std::vector<double> out(ges.eigenvalues().data(),
                          ges.eigenvalues().data() + ges.eigenvalues().size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace tjflow
