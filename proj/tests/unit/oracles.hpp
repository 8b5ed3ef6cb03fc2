#pragma once

// Dense reference computations for small instances. They deliberately avoid the library's
// dual-matrix path: pseudo-inverses go through a complete orthogonal decomposition of the
// d x d Gram matrix and projector norms through full d x d eigenproblems.

#include "mnls/common.hpp"
#include "mnls/model.hpp"

#include <Eigen/Dense>

#include <random>

namespace oracle {

using mnls::DesignMatrix;
using mnls::Matrix;
using mnls::Vector;

inline Matrix pinv(const Matrix& a) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  cod.setThreshold(1e-12);
  return cod.pseudoInverse();
}

/// theta = X^+ Y.
inline Vector min_norm_solution(const DesignMatrix& x, const Vector& y) {
  return pinv(Matrix(x)) * y;
}

/// Orthogonal projector onto the row space of X: (X^T X)^+ X^T X.
inline Matrix rowspace_projector(const DesignMatrix& x) {
  const Matrix gram = Matrix(x).transpose() * Matrix(x);
  return pinv(gram) * gram;
}

/// Sigma = sum_j lambda_j u_j u_j^T assembled column by column.
inline Matrix dense_sigma(const mnls::model::CovarianceModel& model) {
  const auto d = static_cast<Eigen::Index>(model.dimension());
  Matrix s = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vector u = model.eigenvector(static_cast<std::size_t>(j + 1));
    s += model.eigenvalue(static_cast<std::size_t>(j + 1)) * u * u.transpose();
  }
  return s;
}

inline double bias_sq(const Matrix& sigma, const DesignMatrix& x, const Vector& theta) {
  const auto d = sigma.rows();
  const Vector w = (Matrix::Identity(d, d) - rowspace_projector(x)) * theta;
  return w.dot(sigma * w);
}

/// (sigma^2 / n) Tr((X^T X / n)^+ Sigma).
inline double variance(const Matrix& sigma_matrix, const DesignMatrix& x, double sigma) {
  const double n = static_cast<double>(x.rows());
  const Matrix cov = Matrix(x).transpose() * Matrix(x) / n;
  return sigma * sigma / n * (pinv(cov) * sigma_matrix).trace();
}

inline double op_norm_symmetric(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

/// Sample eigenpairs of X^T X / n in non-increasing order.
struct SampleSpectrum {
  Vector values;
  Matrix vectors;
};

inline SampleSpectrum sample_spectrum(const DesignMatrix& x) {
  const double n = static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(x).transpose() * Matrix(x) / n);
  SampleSpectrum s;
  s.values = eig.eigenvalues().reverse();
  s.vectors = eig.eigenvectors().rowwise().reverse();
  return s;
}

inline DesignMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  DesignMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = normal(rng);
  }
  return x;
}

inline Vector random_vector(std::size_t size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(static_cast<Eigen::Index>(size));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

}  // namespace oracle
