#include "tjflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tjflow/errors.hpp"

namespace tjflow {

Grid::Grid(int n, int N) : n_(n), N_(N), size_(0) {
  if (n != 2 && n != 3) {
    throw ValidationError("Grid: complex dimension must be 2 or 3, got " + std::to_string(n));
  }
  if (N < 8 || N % 2 != 0) {
    throw ValidationError("Grid: points per axis must be even and >= 8, got " +
                          std::to_string(N));
  }
  size_ = 1;
  for (int d = 0; d < n; ++d) size_ *= static_cast<std::size_t>(N);
}

std::array<int, 3> Grid::indices(std::size_t flat) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = n_ - 1; d >= 0; --d) {
    idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(N_));
    flat /= static_cast<std::size_t>(N_);
  }
  return idx;
}

std::array<double, 3> Grid::coordinates(std::size_t flat) const noexcept {
  const auto idx = indices(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < n_; ++d) {
    x[static_cast<std::size_t>(d)] = idx[static_cast<std::size_t>(d)] * spacing();
  }
  return x;
}

PotentialField::PotentialField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ValidationError("PotentialField: value count does not match grid");
  }
}

double PotentialField::mean() const noexcept {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

double PotentialField::sup() const noexcept {
  return *std::max_element(values_.begin(), values_.end());
}

double PotentialField::inf() const noexcept {
  return *std::min_element(values_.begin(), values_.end());
}

PotentialField PotentialField::normalized() const {
  PotentialField out(*this);
  out += -mean();
  return out;
}

PotentialField& PotentialField::operator+=(const PotentialField& other) {
  if (!(grid_ == other.grid_)) throw ValidationError("PotentialField: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

PotentialField& PotentialField::operator-=(const PotentialField& other) {
  if (!(grid_ == other.grid_)) throw ValidationError("PotentialField: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

PotentialField& PotentialField::operator+=(double c) noexcept {
  for (double& v : values_) v += c;
  return *this;
}

PotentialField& PotentialField::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

PotentialField operator+(PotentialField a, const PotentialField& b) { return a += b; }
PotentialField operator-(PotentialField a, const PotentialField& b) { return a -= b; }
PotentialField operator*(double s, PotentialField a) { return a *= s; }

double sup_distance(const PotentialField& a, const PotentialField& b) {
  if (!(a.grid_ == b.grid_)) throw ValidationError("sup_distance: grid mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    d = std::max(d, std::abs(a.values_[i] - b.values_[i]));
  }
  return d;
}

FormField::FormField(const Grid& grid)
    : grid_(grid),
      planes_(static_cast<std::size_t>(grid.dim() * (grid.dim() + 1) / 2),
              std::vector<double>(grid.size(), 0.0)) {}

std::size_t FormField::component_index(int n, int j, int k) noexcept {
  if (j > k) std::swap(j, k);
  // rows 0..j-1 contribute n, n-1, ..., n-j+1 entries
  return static_cast<std::size_t>(j * n - j * (j - 1) / 2 + (k - j));
}

FormField FormField::constant(const Grid& grid, const Eigen::MatrixXd& m) {
  const int n = grid.dim();
  if (m.rows() != n || m.cols() != n) {
    throw ValidationError("FormField::constant: matrix shape does not match dimension");
  }
  FormField f(grid);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      const double v = 0.5 * (m(j, k) + m(k, j));
      std::fill(f.plane(j, k).begin(), f.plane(j, k).end(), v);
    }
  }
  return f;
}

FormField FormField::identity(const Grid& grid) {
  return constant(grid, Eigen::MatrixXd::Identity(grid.dim(), grid.dim()));
}

Eigen::MatrixXd FormField::at(std::size_t point) const {
  const int n = dim();
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      const double v = plane(j, k)[point];
      m(j, k) = v;
      m(k, j) = v;
    }
  }
  return m;
}

void FormField::set(std::size_t point, const Eigen::MatrixXd& m) {
  const int n = dim();
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) plane(j, k)[point] = 0.5 * (m(j, k) + m(k, j));
  }
}

FormField& FormField::operator+=(const FormField& other) {
  if (!(grid_ == other.grid_)) throw ValidationError("FormField: grid mismatch");
  for (std::size_t c = 0; c < planes_.size(); ++c) {
    for (std::size_t i = 0; i < planes_[c].size(); ++i) planes_[c][i] += other.planes_[c][i];
  }
  return *this;
}

FormField& FormField::operator*=(double s) noexcept {
  for (auto& p : planes_) {
    for (double& v : p) v *= s;
  }
  return *this;
}

FormField& FormField::add_identity(double s) noexcept {
  for (int j = 0; j < dim(); ++j) {
    for (double& v : plane(j, j)) v += s;
  }
  return *this;
}

namespace {

// Closed form for 2x2, Eigen otherwise.
std::pair<double, double> extreme_eigenvalues(const FormField& f, std::size_t p) {
  if (f.dim() == 2) {
    const double a = f.plane(0, 0)[p], b = f.plane(0, 1)[p], d = f.plane(1, 1)[p];
    const double m = 0.5 * (a + d);
    const double h = 0.5 * (a - d);
    const double r = std::sqrt(h * h + b * b);
    return {m - r, m + r};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.at(p), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues()(0), eig.eigenvalues()(eig.eigenvalues().size() - 1)};
}

}  // namespace

FormField::Extremum FormField::min_eigenvalue() const {
  Extremum e{extreme_eigenvalues(*this, 0).first, 0};
  for (std::size_t p = 1; p < grid_.size(); ++p) {
    const double v = extreme_eigenvalues(*this, p).first;
    if (v < e.value) e = {v, p};
  }
  return e;
}

FormField::Extremum FormField::max_eigenvalue() const {
  Extremum e{extreme_eigenvalues(*this, 0).second, 0};
  for (std::size_t p = 1; p < grid_.size(); ++p) {
    const double v = extreme_eigenvalues(*this, p).second;
    if (v > e.value) e = {v, p};
  }
  return e;
}

FormField operator+(FormField a, const FormField& b) { return a += b; }

}  // namespace tjflow
