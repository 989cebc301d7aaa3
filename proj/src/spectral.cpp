#include "tjflow/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "tjflow/errors.hpp"

namespace tjflow {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SpectralOps::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

SpectralOps::SpectralOps(const Grid& grid)
    : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int n = grid.dim();
  const int N = grid.points_per_axis();
  const int half = N / 2 + 1;
  complex_size_ = grid.size() / static_cast<std::size_t>(N) * static_cast<std::size_t>(half);
  real_buf_.assign(grid.size(), 0.0);
  spec_.assign(complex_size_, {0.0, 0.0});
  work_.assign(complex_size_, {0.0, 0.0});

  wavenumber_.resize(complex_size_);
  nyquist_.resize(complex_size_);
  for (std::size_t m = 0; m < complex_size_; ++m) {
    std::size_t rest = m;
    std::array<int, 3> k{0, 0, 0};
    bool nyq = false;
    for (int d = n - 1; d >= 0; --d) {
      const int extent = (d == n - 1) ? half : N;
      const int i = static_cast<int>(rest % static_cast<std::size_t>(extent));
      rest /= static_cast<std::size_t>(extent);
      if (i == N / 2) nyq = true;
      k[static_cast<std::size_t>(d)] = (i > N / 2) ? i - N : i;
    }
    wavenumber_[m] = k;
    nyquist_[m] = nyq ? 1 : 0;
  }

  std::vector<int> dims(static_cast<std::size_t>(n), N);
  std::lock_guard lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c(n, dims.data(), real_buf_.data(),
                                  reinterpret_cast<fftw_complex*>(spec_.data()),
                                  FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r(n, dims.data(),
                                  reinterpret_cast<fftw_complex*>(work_.data()),
                                  real_buf_.data(), FFTW_ESTIMATE);
  if (!plans_->r2c || !plans_->c2r) throw Error("SpectralOps: FFTW planning failed");
}

SpectralOps::~SpectralOps() = default;

SpectralOps& SpectralOps::for_grid(const Grid& grid) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<SpectralOps>> cache;
  auto& slot = cache[{grid.dim(), grid.points_per_axis()}];
  if (!slot) slot = std::make_unique<SpectralOps>(grid);
  return *slot;
}

void SpectralOps::forward(std::span<const double> in) {
  if (in.size() != real_buf_.size()) throw ValidationError("SpectralOps: size mismatch");
  std::copy(in.begin(), in.end(), real_buf_.begin());
  fftw_execute(plans_->r2c);
  const double scale = 1.0 / static_cast<double>(real_buf_.size());
  for (auto& z : spec_) z *= scale;
}

void SpectralOps::backward(std::span<double> out) {
  fftw_execute(plans_->c2r);  // consumes work_
  std::copy(real_buf_.begin(), real_buf_.end(), out.begin());
}

FormField SpectralOps::reduced_hessian(std::span<const double> phi) {
  FormField out(grid_);
  reduced_hessian(phi, out);
  return out;
}

void SpectralOps::reduced_hessian(std::span<const double> phi, FormField& out) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  forward(phi);
  const int n = grid_.dim();
  for (int j = 0; j < n; ++j) {
    for (int l = j; l < n; ++l) {
      for (std::size_t m = 0; m < complex_size_; ++m) {
        const auto& k = wavenumber_[m];
        const double symbol =
            nyquist_[m] ? 0.0
                        : -pi2 * static_cast<double>(k[static_cast<std::size_t>(j)]) *
                              static_cast<double>(k[static_cast<std::size_t>(l)]);
        work_[m] = symbol * spec_[m];
      }
      backward(out.plane(j, l));
    }
  }
}

void SpectralOps::project(std::span<double> field) {
  forward(field);
  for (std::size_t m = 0; m < complex_size_; ++m) {
    work_[m] = nyquist_[m] ? std::complex<double>(0.0, 0.0) : spec_[m];
  }
  backward(field);
}

void SpectralOps::inverse_scaled_laplacian(std::span<const double> f, double a,
                                           std::span<double> out) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  forward(f);
  for (std::size_t m = 0; m < complex_size_; ++m) {
    const auto& k = wavenumber_[m];
    const double k2 = static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    if (nyquist_[m] || k2 == 0.0) {
      work_[m] = spec_[m];
    } else {
      work_[m] = spec_[m] / (-a * pi2 * k2);
    }
  }
  backward(out);
}

}  // namespace tjflow
