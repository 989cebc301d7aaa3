#pragma once

// Periodic grids on the reduced real torus [0,1)^n and the two field kinds
// living on them: scalar potentials and symmetric-matrix (1,1)-form fields.
// Storage is row-major with axis 0 slowest.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tjflow {

class Grid {
 public:
  /// n in {2, 3}; N even and >= 8. Throws ValidationError otherwise.
  Grid(int n, int N);

  int dim() const noexcept { return n_; }
  int points_per_axis() const noexcept { return N_; }
  double spacing() const noexcept { return 1.0 / N_; }
  std::size_t size() const noexcept { return size_; }

  /// Per-axis integer indices of a flat index.
  std::array<int, 3> indices(std::size_t flat) const noexcept;
  /// Coordinates in [0,1) of a flat index; unused axes are 0.
  std::array<double, 3> coordinates(std::size_t flat) const noexcept;

  bool operator==(const Grid&) const = default;

 private:
  int n_;
  int N_;
  std::size_t size_;
};

/// Scalar potential phi. Two potentials differing by a constant describe the
/// same metric; normalized() picks the mean-zero representative.
class PotentialField {
 public:
  explicit PotentialField(const Grid& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  PotentialField(const Grid& grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  double mean() const noexcept;
  double sup() const noexcept;
  double inf() const noexcept;
  double oscillation() const noexcept { return sup() - inf(); }
  PotentialField normalized() const;

  PotentialField& operator+=(const PotentialField& other);
  PotentialField& operator-=(const PotentialField& other);
  PotentialField& operator+=(double c) noexcept;
  PotentialField& operator*=(double s) noexcept;

  /// sup |a - b| over the grid.
  friend double sup_distance(const PotentialField& a, const PotentialField& b);

 private:
  Grid grid_;
  std::vector<double> values_;
};

PotentialField operator+(PotentialField a, const PotentialField& b);
PotentialField operator-(PotentialField a, const PotentialField& b);
PotentialField operator*(double s, PotentialField a);
double sup_distance(const PotentialField& a, const PotentialField& b);

/// Field of symmetric n x n matrices, stored as n(n+1)/2 component planes in
/// the order (0,0),(0,1),...,(0,n-1),(1,1),...,(n-1,n-1).
class FormField {
 public:
  explicit FormField(const Grid& grid);

  static FormField constant(const Grid& grid, const Eigen::MatrixXd& m);
  static FormField identity(const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }
  std::size_t components() const noexcept { return planes_.size(); }
  static std::size_t component_index(int n, int j, int k) noexcept;

  std::span<double> plane(int j, int k) noexcept {
    return planes_[component_index(dim(), j, k)];
  }
  std::span<const double> plane(int j, int k) const noexcept {
    return planes_[component_index(dim(), j, k)];
  }
  std::span<double> plane(std::size_t c) noexcept { return planes_[c]; }
  std::span<const double> plane(std::size_t c) const noexcept { return planes_[c]; }

  Eigen::MatrixXd at(std::size_t point) const;
  void set(std::size_t point, const Eigen::MatrixXd& m);

  FormField& operator+=(const FormField& other);
  FormField& operator*=(double s) noexcept;
  /// Adds s * identity at every point.
  FormField& add_identity(double s) noexcept;

  /// Smallest eigenvalue over the grid and where it occurs.
  struct Extremum {
    double value;
    std::size_t point;
  };
  Extremum min_eigenvalue() const;
  Extremum max_eigenvalue() const;

 private:
  Grid grid_;
  std::vector<std::vector<double>> planes_;
};

FormField operator+(FormField a, const FormField& b);

}  // namespace tjflow
