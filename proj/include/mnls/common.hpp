#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace mnls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Designs are stored dense and row-major: one observation per row.
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// A configuration or model that violates a structural invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar argument outside its admissible domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by iterative eigen-solvers that exhaust their iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double last_value)
      : std::runtime_error(what), iterations_(iterations), last_value_(last_value) {}

  int iterations() const noexcept { return iterations_; }
  double last_value() const noexcept { return last_value_; }

 private:
  int iterations_;
  double last_value_;
};

inline void require_dims(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                         ", expected " + std::to_string(want) + ")");
  }
}

}  // namespace mnls
