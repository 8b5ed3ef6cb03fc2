#include "mnls/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace mnls::estimator {

double rank_tolerance(std::size_t n, std::size_t d) {
  return static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon();
}

DualDecomposition::DualDecomposition(std::shared_ptr<const DesignMatrix> design, Vector eigenvalues,
                                     Matrix dual_vectors, std::size_t rank)
    : design_(std::move(design)),
      eigenvalues_(std::move(eigenvalues)),
      dual_vectors_(std::move(dual_vectors)),
      rank_(rank) {}

Vector DualDecomposition::sample_eigenvector(std::size_t j) const {
  if (j < 1 || j > rank_) throw DimensionError("sample eigenvector index outside 1..rank");
  const auto col = static_cast<Eigen::Index>(j - 1);
  Vector u = design_->transpose() * dual_vectors_.col(col);
  u /= std::sqrt(static_cast<double>(samples()) * eigenvalues_[col]);
  return u;
}

Matrix DualDecomposition::sample_eigenvectors(std::size_t m) const {
  if (m > rank_) throw DimensionError("requested more sample eigenvectors than the rank");
  const auto cols = static_cast<Eigen::Index>(m);
  Matrix u = design_->transpose() * dual_vectors_.leftCols(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    u.col(j) /= std::sqrt(static_cast<double>(samples()) * eigenvalues_[j]);
  }
  return u;
}

Vector DualDecomposition::dual_pseudo_inverse(const Vector& a) const {
  require_dims(static_cast<std::size_t>(a.size()), samples(), "dual_pseudo_inverse");
  const auto r = static_cast<Eigen::Index>(rank_);
  const auto v = dual_vectors_.leftCols(r);
  Vector coeffs = v.transpose() * a;
  const double n = static_cast<double>(samples());
  for (Eigen::Index j = 0; j < r; ++j) coeffs[j] /= n * eigenvalues_[j];
  return v * coeffs;
}

DualDecomposition dual_decompose(std::shared_ptr<const DesignMatrix> X) {
  const DesignMatrix& x = *X;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 1 || d < 1) throw DimensionError("dual_decompose needs n >= 1 and d >= 1");
  if (!x.allFinite()) throw std::invalid_argument("dual_decompose: design has non-finite entries");

  Matrix dual = Matrix::Zero(n, n);
  dual.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dual.selfadjointView<Eigen::Lower>());
  if (eig.info() != Eigen::Success) throw std::runtime_error("dual eigendecomposition failed");

  // Solver order is ascending; flip to non-increasing.
  Vector lambda = eig.eigenvalues().reverse();
  Matrix v = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) v.col(j) *= -1.0;
  }

  const double top = std::max(lambda[0], 0.0);
  const double cutoff = rank_tolerance(static_cast<std::size_t>(n), static_cast<std::size_t>(d)) * top;
  std::size_t rank = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (top > 0.0 && lambda[j] > cutoff) {
      ++rank;
    } else {
      lambda[j] = 0.0;
    }
  }
  return DualDecomposition(std::move(X), std::move(lambda), std::move(v), rank);
}

DualDecomposition dual_decompose(const DesignMatrix& X) {
  return dual_decompose(std::make_shared<const DesignMatrix>(X));
}

MnlsFit fit_mnls(const DualDecomposition& dd, const Vector& Y) {
  require_dims(static_cast<std::size_t>(Y.size()), dd.samples(), "fit_mnls");
  const DesignMatrix& x = dd.design();
  Vector theta = x.transpose() * dd.dual_pseudo_inverse(Y);
  // One refinement step: theta + X^dagger (Y - X theta) recovers X^dagger Y exactly in exact
  // arithmetic and removes most of the error from squaring the condition number.
  const Vector r = Y - x * theta;
  theta.noalias() += x.transpose() * dd.dual_pseudo_inverse(r);

  MnlsFit fit;
  fit.residual_norm = (x * theta - Y).norm();
  fit.interpolating = fit.residual_norm <= 1e-8 * std::max(Y.norm(), std::numeric_limits<double>::min());
  if (Y.norm() == 0.0) fit.interpolating = fit.residual_norm == 0.0;
  fit.theta = std::move(theta);
  return fit;
}

MnlsFit fit_mnls(const DesignMatrix& X, const Vector& Y) { return fit_mnls(dual_decompose(X), Y); }

Vector fit_direct(const DesignMatrix& X, const Vector& Y) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  if (static_cast<double>(n) * static_cast<double>(d) > 1e6) {
    throw DimensionError("fit_direct: n*d exceeds the 1e6 dense guard");
  }
  require_dims(static_cast<std::size_t>(Y.size()), n, "fit_direct");
  const Matrix a = X;
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(d));
  if (s.size() == 0 || s[0] == 0.0) return theta;
  // Same cutoff as the dual path, expressed on singular values: s_j^2 > tau s_1^2.
  const double cutoff = std::sqrt(rank_tolerance(n, d)) * s[0];
  const Vector uty = svd.matrixU().transpose() * Y;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s[j] > cutoff) theta += svd.matrixV().col(j) * (uty[j] / s[j]);
  }
  return theta;
}

RowspaceSplit project_rowspace(const DualDecomposition& dd, const Vector& w) {
  require_dims(static_cast<std::size_t>(w.size()), dd.dimension(), "project_rowspace");
  const DesignMatrix& x = dd.design();
  Vector q = x.transpose() * dd.dual_pseudo_inverse(x * w);
  Vector residual = w - q;
  return RowspaceSplit{std::move(q), std::move(residual)};
}

}  // namespace mnls::estimator
