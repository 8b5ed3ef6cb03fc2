#pragma once

// Matrix-free spectral helpers shared by the bound evaluators and the diagnostics.

#include "mnls/common.hpp"
#include "mnls/estimator.hpp"
#include "mnls/model.hpp"

#include <functional>
#include <span>

namespace mnls::spectral {

/// y = A x for a symmetric operator A.
using SymmetricOperator = std::function<void(const Vector& x, Vector& y)>;

struct ExtremeEigenvalue {
  double magnitude = 0.0;  // max |eigenvalue|
  double largest = 0.0;    // largest Ritz value
  double smallest = 0.0;   // smallest Ritz value
  int iterations = 0;
};

/// Largest-magnitude eigenvalue of a symmetric operator by Lanczos iteration with full
/// reorthogonalization and explicit restarts, started from a keyed Gaussian probe. Stops once
/// the Ritz residual of the extreme pair is below tol * |value|. Throws ConvergenceError
/// carrying the last estimate after max_iter operator applications.
ExtremeEigenvalue largest_magnitude_eigenvalue(const SymmetricOperator& op, std::size_t dim, double tol,
                                               int max_iter, std::uint64_t probe_seed = 0x5eed);

/// ||u_hat - (u_hat^T u) u|| for unit vectors: the sine of the angle, which equals the operator
/// norm of u_hat u_hat^T - u u^T.
double rank_one_projector_distance(const Vector& u_hat, const Vector& u);

/// Sample and population eigen-projectors P_hat_j, P_j for j <= M expressed in an orthonormal
/// basis of span{u_hat_1..u_hat_M, u_1..u_M}, so that norms of any combination
/// sum_j c_j (P_hat_j - P_j) reduce to a (<= 2M)-dimensional symmetric eigenproblem.
class ProjectorPerturbation {
 public:
  ProjectorPerturbation(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                        std::size_t max_index);

  std::size_t max_index() const { return max_index_; }
  /// || sum_{j <= m} c_j (P_hat_j - P_j) || with c = coefficients[0..m-1].
  double combination_norm(std::span<const double> coefficients, std::size_t m) const;
  /// ||P_hat_j - P_j||, 1-based.
  double distance(std::size_t j) const { return distances_[j - 1]; }

 private:
  std::size_t max_index_;
  Matrix hat_coords_;  // k x M
  Matrix pop_coords_;  // k x M
  std::vector<double> distances_;
};

}  // namespace mnls::spectral
