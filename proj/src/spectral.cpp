#include "mnls/spectral.hpp"

#include "mnls/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>

namespace mnls::spectral {

namespace {

constexpr std::size_t kRestartLength = 96;

struct RitzPick {
  double value = 0.0;
  double largest = 0.0;
  double smallest = 0.0;
  Eigen::Index index = 0;
  Vector vector;
};

RitzPick extreme_ritz(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const auto k = static_cast<Eigen::Index>(alpha.size());
  Vector diag = Eigen::Map<const Vector>(alpha.data(), k);
  Vector sub = k > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), k - 1)) : Vector(0);
  Eigen::SelfAdjointEigenSolver<Matrix> tri;
  tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const Vector& theta = tri.eigenvalues();
  RitzPick pick;
  pick.smallest = theta[0];
  pick.largest = theta[k - 1];
  pick.index = std::abs(theta[0]) > std::abs(theta[k - 1]) ? 0 : k - 1;
  pick.value = theta[pick.index];
  pick.vector = tri.eigenvectors().col(pick.index);
  return pick;
}

}  // namespace

ExtremeEigenvalue largest_magnitude_eigenvalue(const SymmetricOperator& op, std::size_t dim, double tol,
                                               int max_iter, std::uint64_t probe_seed) {
  if (!(tol > 0.0)) throw DomainError("eigenvalue tolerance must be > 0");
  if (dim == 0) return {};
  const auto n = static_cast<Eigen::Index>(dim);
  const std::size_t block = std::min<std::size_t>(kRestartLength, dim);

  Vector start(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    start[k] = keyed_normal_pair(probe_seed, 0, static_cast<std::uint32_t>(k), StreamRole::Probe).first;
  }
  start.normalize();

  int iterations = 0;
  double last = 0.0;
  Matrix basis(n, static_cast<Eigen::Index>(block));
  Vector w(n);
  while (true) {
    std::vector<double> alpha;
    std::vector<double> beta;
    basis.col(0) = start;
    for (std::size_t k = 0; k < block; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      op(basis.col(kk), w);
      ++iterations;
      const double a = basis.col(kk).dot(w);
      alpha.push_back(a);
      // Full reorthogonalization, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        const Vector h = basis.leftCols(kk + 1).transpose() * w;
        w.noalias() -= basis.leftCols(kk + 1) * h;
      }
      const double b = w.norm();
      const RitzPick pick = extreme_ritz(alpha, beta);
      last = std::abs(pick.value);
      const double residual = b * std::abs(pick.vector[kk]);
      const bool exhausted = (k + 1 == dim) || b <= 1e-14 * std::max(last, 1e-300);
      if (residual <= tol * last || exhausted || last == 0.0) {
        return ExtremeEigenvalue{last, pick.largest, pick.smallest, iterations};
      }
      if (iterations >= max_iter) {
        throw ConvergenceError("Lanczos did not converge within " + std::to_string(max_iter) + " iterations",
                               iterations, last);
      }
      if (k + 1 == block) {
        start = basis * pick.vector;
        start.normalize();
        break;
      }
      beta.push_back(b);
      basis.col(kk + 1) = w / b;
    }
  }
}

double rank_one_projector_distance(const Vector& u_hat, const Vector& u) {
  const Vector r = u_hat - u_hat.dot(u) * u;
  return std::clamp(r.norm(), 0.0, 1.0);
}

ProjectorPerturbation::ProjectorPerturbation(const model::CovarianceModel& model,
                                             const estimator::DualDecomposition& dd, std::size_t max_index)
    : max_index_(max_index) {
  require_dims(dd.dimension(), model.dimension(), "ProjectorPerturbation");
  if (max_index > dd.rank()) throw DimensionError("projector index exceeds the sample rank");
  const auto d = static_cast<Eigen::Index>(model.dimension());
  const auto m = static_cast<Eigen::Index>(max_index);
  Matrix span(d, 2 * m);
  span.leftCols(m) = dd.sample_eigenvectors(max_index);
  for (Eigen::Index j = 0; j < m; ++j) span.col(m + j) = model.eigenvector(static_cast<std::size_t>(j + 1));

  distances_.resize(max_index);
  for (Eigen::Index j = 0; j < m; ++j) {
    distances_[static_cast<std::size_t>(j)] = rank_one_projector_distance(span.col(j), span.col(m + j));
  }

  if (m == 0) return;
  Eigen::HouseholderQR<Matrix> qr(span);
  const Eigen::Index k = std::min(d, 2 * m);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  hat_coords_ = r.leftCols(m);
  pop_coords_ = r.rightCols(m);
}

double ProjectorPerturbation::combination_norm(std::span<const double> coefficients, std::size_t m) const {
  if (m > max_index_ || coefficients.size() < m) throw DimensionError("combination_norm index out of range");
  if (m == 0) return 0.0;
  const Eigen::Index k = hat_coords_.rows();
  Matrix acc = Matrix::Zero(k, k);
  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    acc.noalias() += coefficients[j] * (hat_coords_.col(jj) * hat_coords_.col(jj).transpose());
    acc.noalias() -= coefficients[j] * (pop_coords_.col(jj) * pop_coords_.col(jj).transpose());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(acc, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace mnls::spectral
