#include "tjflow/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tjflow {

std::vector<CosineMode> random_modes(Rng& rng, int n, int kmax, int count) {
  std::vector<CosineMode> modes;
  while (static_cast<int>(modes.size()) < count) {
    CosineMode m;
    m.kind = CosineMode::Kind::Plane;
    m.k.resize(static_cast<std::size_t>(n));
    bool zero = true;
    for (int d = 0; d < n; ++d) {
      m.k[static_cast<std::size_t>(d)] = rng.integer(-kmax, kmax);
      zero = zero && m.k[static_cast<std::size_t>(d)] == 0;
    }
    m.amplitude = rng.uniform(-1.0, 1.0);
    m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    if (!zero) modes.push_back(std::move(m));
  }
  return modes;
}

PotentialField random_potential(const Grid& grid, Rng& rng, double hessian_bound, int kmax,
                                int count) {
  PotentialField phi = sample_modes(grid, random_modes(rng, grid.dim(), kmax, count));
  const FormField h = reduced_hessian(phi);
  const double scale = std::max(std::abs(h.min_eigenvalue().value),
                                std::abs(h.max_eigenvalue().value));
  if (scale > 0.0) phi *= hessian_bound / scale;
  return phi;
}

Eigen::MatrixXd random_spd(Rng& rng, int n, double lo, double hi) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = rng.uniform(lo, hi);
  Eigen::MatrixXd m = q * d.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

}  // namespace tjflow
