#pragma once

// Fourier-space operators on a periodic grid, backed by FFTW.
//
// The discrete space is the span of modes with |k_d| < N/2 on every axis;
// Nyquist modes are excluded so that every derivative symbol is real and the
// discrete integration-by-parts identities hold exactly.

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "tjflow/field.hpp"

namespace tjflow {

class SpectralOps {
 public:
  explicit SpectralOps(const Grid& grid);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;

  /// Per-thread cached instance for a grid.
  static SpectralOps& for_grid(const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }

  /// (1/4) * real Hessian, the reduced form of i d dbar phi.
  FormField reduced_hessian(std::span<const double> phi);
  void reduced_hessian(std::span<const double> phi, FormField& out);

  /// Removes Nyquist content in place.
  void project(std::span<double> field);

  /// Solves (a/4) Lap u + mean(u) = f on the resolved space; Nyquist content
  /// of f passes through unchanged. Used as a preconditioner.
  void inverse_scaled_laplacian(std::span<const double> f, double a, std::span<double> out);

 private:
  void forward(std::span<const double> in);
  void backward(std::span<double> out);

  Grid grid_;
  std::size_t complex_size_;
  std::vector<double> real_buf_;
  std::vector<std::complex<double>> spec_;
  std::vector<std::complex<double>> work_;
  /// Per-mode integer wavenumbers (row-major over the half-complex layout).
  std::vector<std::array<int, 3>> wavenumber_;
  std::vector<unsigned char> nyquist_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace tjflow
