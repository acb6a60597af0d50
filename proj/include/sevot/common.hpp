#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sevot {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, violated invariants, shape mismatches.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what,
                           std::vector<std::string> details = {})
      : Error(what), details_(std::move(details)) {}

  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  std::vector<std::string> details_;
};

class IndexError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SizeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-finite values, underflow, solver breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised when exp(-D/epsilon) leaves the representable range and the caller
// forced the plain scaling iteration.
class NumericalRangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline void check_index(Index index, Index size, const char* what) {
  if (index < 0 || index >= size) {
    throw IndexError(std::string(what) + " " + std::to_string(index) +
                     " out of range [0, " + std::to_string(size) + ")");
  }
}

}  // namespace sevot
