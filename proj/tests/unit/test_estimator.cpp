#include "mnls/estimator.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mnls;
using namespace mnls::estimator;

namespace {

DesignMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  DesignMatrix x(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index k = 0;
    for (double v : row) x(i, k++) = v;
    ++i;
  }
  return x;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(DualDecompose, SingleRow) {
  const auto dd = dual_decompose(rows({{2.0, 0.0, 0.0}}));
  EXPECT_EQ(dd.rank(), 1u);
  EXPECT_NEAR(dd.eigenvalue(1), 4.0, 1e-14);
  EXPECT_LT((dd.sample_eigenvector(1) - vec({1.0, 0.0, 0.0})).norm(), 1e-14);
}

TEST(DualDecompose, IdentityDesign) {
  const auto dd = dual_decompose(rows({{1.0, 0.0}, {0.0, 1.0}}));
  EXPECT_EQ(dd.rank(), 2u);
  EXPECT_NEAR(dd.eigenvalue(1), 0.5, 1e-15);
  EXPECT_NEAR(dd.eigenvalue(2), 0.5, 1e-15);
}

TEST(DualDecompose, NonFiniteRejected) {
  auto x = rows({{1.0, 2.0}});
  x(0, 1) = std::nan("");
  EXPECT_THROW(dual_decompose(x), std::invalid_argument);
}

TEST(DualDecompose, MatchesDenseSpectrum) {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = oracle::random_matrix(6, 15, rng);
    const auto dd = dual_decompose(x);
    const auto dense = oracle::sample_spectrum(x);
    ASSERT_EQ(dd.rank(), 6u);
    for (std::size_t j = 1; j <= 6; ++j) {
      const double ref = dense.values[static_cast<Eigen::Index>(j - 1)];
      EXPECT_NEAR(dd.eigenvalue(j), ref, 1e-8 * ref);
    }
  }
}

TEST(DualDecompose, EigenpairResidualsAndOrthonormality) {
  std::mt19937_64 rng(7);
  const auto x = oracle::random_matrix(20, 80, rng);
  const auto dd = dual_decompose(x);
  const Matrix dual = Matrix(x) * Matrix(x).transpose() / 20.0;
  for (std::size_t j = 1; j <= dd.rank(); ++j) {
    const Vector v = dd.dual_vectors().col(static_cast<Eigen::Index>(j - 1));
    EXPECT_LE((dual * v - dd.eigenvalue(j) * v).norm(), 1e-8 * dd.eigenvalue(1));
    EXPECT_NEAR(dd.sample_eigenvector(j).norm(), 1.0, 1e-8);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(v[arg], 0.0);
  }
  const Matrix u = dd.sample_eigenvectors(dd.rank());
  const Matrix gram = u.transpose() * u;
  EXPECT_LE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-7);
  for (Eigen::Index j = 1; j < dd.eigenvalues().size(); ++j) EXPECT_GE(dd.eigenvalues()[j - 1], dd.eigenvalues()[j]);
}

TEST(DualDecompose, SpectralDualityDense) {
  std::mt19937_64 rng(8);
  for (auto [n, d] : {std::pair{5, 30}, std::pair{12, 20}, std::pair{30, 30}}) {
    const auto x = oracle::random_matrix(n, d, rng);
    const auto dd = dual_decompose(x);
    const auto dense = oracle::sample_spectrum(x);
    for (std::size_t j = 1; j <= dd.rank(); ++j) {
      const double ref = dense.values[static_cast<Eigen::Index>(j - 1)];
      EXPECT_NEAR(dd.eigenvalue(j), ref, 1e-8 * ref);
    }
  }
}

TEST(DualDecompose, RankDeficientDesign) {
  std::mt19937_64 rng(3);
  DesignMatrix x = oracle::random_matrix(5, 12, rng);
  x.row(4) = 2.0 * x.row(0) - x.row(1);
  const auto dd = dual_decompose(x);
  EXPECT_EQ(dd.rank(), 4u);
  EXPECT_EQ(dd.eigenvalue(5), 0.0);
  EXPECT_THROW(dd.sample_eigenvector(5), DimensionError);
}

TEST(FitMnls, TrivialCases) {
  const auto a = fit_mnls(rows({{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}}), vec({1.0, 2.0}));
  EXPECT_LT((a.theta - vec({1.0, 1.0, 0.0})).norm(), 1e-14);
  EXPECT_TRUE(a.interpolating);
  const auto b = fit_mnls(rows({{1.0, 1.0}}), vec({2.0}));
  EXPECT_LT((b.theta - vec({1.0, 1.0})).norm(), 1e-14);

  EXPECT_LT((fit_direct(rows({{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}}), vec({1.0, 2.0})) - a.theta).norm(), 1e-8);
  EXPECT_LT((fit_direct(rows({{1.0, 1.0}}), vec({2.0})) - b.theta).norm(), 1e-8);
  EXPECT_EQ(fit_direct(DesignMatrix::Zero(3, 4), Vector::Zero(3)), Vector::Zero(4));
}

TEST(FitMnls, RandomAgreementWithDenseOracle) {
  std::mt19937_64 rng(2025);
  std::uniform_int_distribution<int> size(1, 30);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = size(rng);
    const int d = size(rng);
    const auto x = oracle::random_matrix(n, d, rng);
    const Vector y = oracle::random_vector(n, rng);
    const Vector ref = oracle::min_norm_solution(x, y);
    const auto fit = fit_mnls(x, y);
    const double scale = std::max(ref.norm(), 1e-300);
    EXPECT_LE((fit.theta - ref).norm(), 1e-8 * scale) << n << "x" << d;
    EXPECT_LE((fit_direct(x, y) - ref).norm(), 1e-8 * scale) << n << "x" << d;
    if (n <= d) {
      EXPECT_TRUE(fit.interpolating);
      EXPECT_LE((Vector(x * fit.theta) - y).norm(), 1e-8 * y.norm());
    }
  }
}

TEST(FitMnls, OrthogonalToNullSpaceAndMinimumNorm) {
  std::mt19937_64 rng(5);
  const auto x = oracle::random_matrix(8, 25, rng);
  const Vector y = oracle::random_vector(8, rng);
  const auto dd = dual_decompose(x);
  const auto fit = fit_mnls(dd, y);
  const auto split = project_rowspace(dd, fit.theta);
  EXPECT_LE(split.residual.norm(), 1e-8 * fit.theta.norm());
  for (int k = 0; k < 100; ++k) {
    const Vector z = oracle::random_vector(25, rng);
    const Vector null_dir = project_rowspace(dd, z).residual;
    EXPECT_GE((fit.theta + null_dir).norm(), fit.theta.norm() - 1e-10);
  }
}

TEST(FitMnls, NonInterpolatingFlag) {
  const auto x = rows({{1.0, 1.0}, {2.0, 2.0}});
  const auto fit = fit_mnls(x, vec({1.0, 0.0}));
  EXPECT_FALSE(fit.interpolating);
  EXPECT_LT((fit.theta - oracle::min_norm_solution(x, vec({1.0, 0.0}))).norm(), 1e-12);
}

TEST(FitMnls, GradientDescentLimit) {
  std::mt19937_64 rng(11);
  const auto x = oracle::random_matrix(5, 12, rng);
  const Vector y = oracle::random_vector(5, rng);
  const auto dd = dual_decompose(x);
  const Vector target = fit_mnls(dd, y).theta;
  // Squared loss (1/2n)||X theta - Y||^2 has Hessian Sigma_hat; step 0.1 / lambda_hat_1.
  const double step = 0.1 / dd.eigenvalue(1);
  Vector theta = Vector::Zero(12);
  for (int it = 0; it < 10000; ++it) theta -= step * Vector(x.transpose() * (x * theta - y)) / 5.0;
  EXPECT_LT((theta - target).norm(), 1e-4);
}

TEST(FitDirect, SizeGuard) {
  EXPECT_THROW(fit_direct(DesignMatrix::Zero(2, 600000), Vector::Zero(2)), DimensionError);
}

TEST(ProjectRowspace, InAndOutOfSpace) {
  std::mt19937_64 rng(13);
  const auto x = oracle::random_matrix(4, 10, rng);
  const auto dd = dual_decompose(x);
  const auto in = project_rowspace(dd, dd.sample_eigenvector(1));
  EXPECT_LT(in.residual.norm(), 1e-12);
  const Vector w = project_rowspace(dd, oracle::random_vector(10, rng)).residual;
  EXPECT_LT(project_rowspace(dd, w).projection.norm(), 1e-12 * std::max(1.0, w.norm()));
}

TEST(ProjectRowspace, DenseProjectorAndIdempotence) {
  std::mt19937_64 rng(17);
  const auto x = oracle::random_matrix(7, 19, rng);
  const auto dd = dual_decompose(x);
  const Matrix p = oracle::rowspace_projector(x);
  for (int k = 0; k < 10; ++k) {
    const Vector w = oracle::random_vector(19, rng);
    const auto split = project_rowspace(dd, w);
    EXPECT_LT((split.projection - p * w).norm(), 1e-8 * w.norm());
    EXPECT_LT((split.projection + split.residual - w).norm(), 1e-10 * w.norm());
    EXPECT_LT((project_rowspace(dd, split.projection).projection - split.projection).norm(), 1e-8 * w.norm());
  }
  EXPECT_THROW(project_rowspace(dd, Vector::Zero(3)), DimensionError);
}
