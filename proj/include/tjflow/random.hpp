#pragma once

// Seeded generation of band-limited test data.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tjflow/field.hpp"
#include "tjflow/geometry.hpp"

namespace tjflow {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// A few random plane-wave modes with |k_d| <= kmax.
std::vector<CosineMode> random_modes(Rng& rng, int n, int kmax, int count);

/// Random band-limited potential scaled so that the largest eigenvalue
/// magnitude of its reduced Hessian equals hessian_bound; omega_phi then has
/// eigenvalues in [1 - bound, 1 + bound].
PotentialField random_potential(const Grid& grid, Rng& rng, double hessian_bound,
                                int kmax = 3, int count = 4);

/// Random symmetric positive definite n x n matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(Rng& rng, int n, double lo, double hi);

}  // namespace tjflow
