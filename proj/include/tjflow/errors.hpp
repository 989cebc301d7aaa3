#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tjflow {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric left the positive cone. Carries the smallest eigenvalue seen and
/// the flat grid index where it occurred (npos for pointwise inputs).
class PositivityViolation : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  PositivityViolation(const std::string& what, double min_eigenvalue,
                      std::size_t location = npos)
      : Error(what), min_eigenvalue_(min_eigenvalue), location_(location) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  std::size_t location() const noexcept { return location_; }

 private:
  double min_eigenvalue_;
  std::size_t location_;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// Rejected input data or configuration (maps to CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of iterations or stagnated (exit code 4).
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// The requested computation is routed elsewhere on purpose (exit code 3).
class DesignedFallback : public Error {
 public:
  using Error::Error;
};

}  // namespace tjflow
