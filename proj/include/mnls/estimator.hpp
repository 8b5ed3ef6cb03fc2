#pragma once

// Minimum-norm least squares through the n x n dual matrix D = X X^T / n. The d x d sample
// covariance is never formed; sample eigenvectors are recovered on demand as
// u_hat_j = X^T v_j / sqrt(n lambda_hat_j).

#include "mnls/common.hpp"

#include <memory>

namespace mnls::estimator {

/// tau = max(n, d) * machine epsilon; eigenvalues <= tau * lambda_hat_1 count as zero.
double rank_tolerance(std::size_t n, std::size_t d);

class DualDecomposition {
 public:
  DualDecomposition(std::shared_ptr<const DesignMatrix> design, Vector eigenvalues, Matrix dual_vectors,
                    std::size_t rank);

  std::size_t samples() const { return static_cast<std::size_t>(design_->rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(design_->cols()); }
  const DesignMatrix& design() const { return *design_; }
  const std::shared_ptr<const DesignMatrix>& design_ptr() const { return design_; }

  /// lambda_hat, non-increasing, length n; entries past rank() are exactly zero.
  const Vector& eigenvalues() const { return eigenvalues_; }
  /// lambda_hat_j, 1-based.
  double eigenvalue(std::size_t j) const { return eigenvalues_[static_cast<Eigen::Index>(j - 1)]; }
  const Matrix& dual_vectors() const { return dual_vectors_; }
  std::size_t rank() const { return rank_; }

  /// u_hat_j (unit norm), 1-based, j <= rank().
  Vector sample_eigenvector(std::size_t j) const;
  /// [u_hat_1 ... u_hat_m], d x m.
  Matrix sample_eigenvectors(std::size_t m) const;
  /// (X X^T)^dagger a for a in R^n.
  Vector dual_pseudo_inverse(const Vector& a) const;

 private:
  std::shared_ptr<const DesignMatrix> design_;
  Vector eigenvalues_;
  Matrix dual_vectors_;
  std::size_t rank_;
};

/// Throws std::invalid_argument on non-finite entries.
DualDecomposition dual_decompose(std::shared_ptr<const DesignMatrix> X);
DualDecomposition dual_decompose(const DesignMatrix& X);

struct MnlsFit {
  Vector theta;
  /// False when Y has a component outside the column space of X.
  bool interpolating = true;
  double residual_norm = 0.0;
};

/// theta_hat = X^T (X X^T)^dagger Y with one step of iterative refinement.
MnlsFit fit_mnls(const DualDecomposition& dd, const Vector& Y);
MnlsFit fit_mnls(const DesignMatrix& X, const Vector& Y);

/// Dense SVD reference path; refuses n * d > 1e6.
Vector fit_direct(const DesignMatrix& X, const Vector& Y);

struct RowspaceSplit {
  Vector projection;  // Q_hat w
  Vector residual;    // (I - Q_hat) w
};

/// Q_hat = sum_{j <= rank} u_hat_j u_hat_j^T, applied as X^T (X X^T)^dagger X w.
RowspaceSplit project_rowspace(const DualDecomposition& dd, const Vector& w);

}  // namespace mnls::estimator
