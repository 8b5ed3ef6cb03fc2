#include "mnls/diagnostics.hpp"

#include "mnls/parallel.hpp"
#include "mnls/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mnls::diagnostics {

namespace {

// Eigenvalues (ascending) of a small symmetric matrix.
Vector symmetric_eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return Vector(0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

// sigma_max(B / sqrt n)^2 through the n x n Gram matrix.
template <typename Block>
double top_gram_eigenvalue(const Block& b, double n) {
  if (b.cols() == 0) return 0.0;
  Matrix gram = Matrix::Zero(b.rows(), b.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(Matrix(b));
  gram = gram.selfadjointView<Eigen::Lower>();
  return std::max(0.0, symmetric_eigenvalues(gram / n).maxCoeff());
}

}  // namespace

EigRatio eig_ratio(const estimator::DualDecomposition& dd, const model::CovarianceModel& model, std::size_t m,
                   std::size_t m_bar, double t) {
  require_dims(dd.dimension(), model.dimension(), "eig_ratio");
  if (m_bar == 0) m_bar = model.spike_count();
  if (m > m_bar || m_bar > dd.rank() || m_bar >= model.dimension()) {
    throw DimensionError("eig_ratio requires m <= m_bar <= rank and m_bar < d");
  }
  const double n = static_cast<double>(dd.samples());
  const double d = static_cast<double>(dd.dimension());
  EigRatio out;
  out.ratios.reserve(m);
  for (std::size_t k = 1; k <= m; ++k) {
    const double lam = model.eigenvalue(k);
    out.ratios.push_back(std::abs(dd.eigenvalue(k) - lam) / lam);
  }
  out.max = out.ratios.empty() ? 0.0 : *std::max_element(out.ratios.begin(), out.ratios.end());
  if (m >= 1) out.spike_term = d * model.eigenvalue(m_bar + 1) / (n * model.eigenvalue(m));
  out.sampling_term = std::sqrt(std::max(static_cast<double>(m_bar), t) / n);
  return out;
}

SmallestRatio smallest_eig_ratio(const estimator::DualDecomposition& dd, const model::CovarianceModel& model) {
  require_dims(dd.dimension(), model.dimension(), "smallest_eig_ratio");
  const std::size_t n = dd.samples();
  SmallestRatio out;
  out.rank_deficient = dd.rank() < n;
  const double d = static_cast<double>(dd.dimension());
  out.ratio = static_cast<double>(n) * dd.eigenvalue(n) / (d * model.eigenvalue(model.dimension()));
  return out;
}

double projector_dist(const estimator::DualDecomposition& dd, const model::CovarianceModel& model, std::size_t j) {
  require_dims(dd.dimension(), model.dimension(), "projector_dist");
  if (j < 1 || j > dd.rank()) throw DimensionError("projector_dist: index outside 1..rank");
  const std::size_t d = model.dimension();
  const double lam = model.eigenvalue(j);
  const bool tied = (j > 1 && model.eigenvalue(j - 1) == lam) || (j < d && model.eigenvalue(j + 1) == lam);
  if (tied) throw DomainError("projector_dist: eigenvalue " + std::to_string(j) + " is not simple");
  return spectral::rank_one_projector_distance(dd.sample_eigenvector(j), model.eigenvector(j));
}

double op_norm_diff(const DesignMatrix& X, const model::CovarianceModel& model, double tol, int max_iter) {
  require_dims(static_cast<std::size_t>(X.cols()), model.dimension(), "op_norm_diff");
  const double n = static_cast<double>(X.rows());
  auto op = [&](const Vector& v, Vector& y) {
    y = model.apply_sigma(v);
    if (X.rows() > 0) {
      const Vector xv = X * v;
      y.noalias() = X.transpose() * xv / n - y;
    } else {
      y = -y;
    }
  };
  return spectral::largest_magnitude_eigenvalue(op, model.dimension(), tol, max_iter).magnitude;
}

double opnorm_chain_bound(const DesignMatrix& Z, const model::CovarianceModel& model, std::size_t m) {
  require_dims(static_cast<std::size_t>(Z.cols()), model.dimension(), "opnorm_chain_bound");
  if (m < 1 || m >= model.dimension()) throw DimensionError("opnorm_chain_bound requires 1 <= m < d");
  const double n = static_cast<double>(Z.rows());
  const auto mm = static_cast<Eigen::Index>(m);
  const Matrix zs = Z.leftCols(mm);
  const Matrix centred = zs.transpose() * zs / n - Matrix::Identity(mm, mm);
  const double spike_dev = symmetric_eigenvalues(centred).cwiseAbs().maxCoeff();
  const double s_spike = std::sqrt(top_gram_eigenvalue(zs, n));
  const double s_perp_sq = top_gram_eigenvalue(Z.rightCols(Z.cols() - mm), n);
  const double l1 = model.eigenvalue(1);
  const double lm = model.eigenvalue(m + 1);
  return l1 * spike_dev + 2.0 * std::sqrt(l1 * lm) * s_spike * std::sqrt(s_perp_sq) + lm * s_perp_sq + lm;
}

DualSplit dual_split(const DesignMatrix& X, const model::CovarianceModel& model,
                     const std::optional<sampler::DesignProvenance>& provenance, std::size_t m_bar) {
  require_dims(static_cast<std::size_t>(X.cols()), model.dimension(), "dual_split");
  if (!provenance) throw std::invalid_argument("dual_split needs the sampling stream; design was supplied externally");
  const auto n = X.rows();
  const std::size_t d = model.dimension();
  if (m_bar > static_cast<std::size_t>(n) || m_bar >= d) throw DimensionError("dual_split requires m_bar <= n, m_bar < d");
  const double nd = static_cast<double>(n);

  Matrix dual = Matrix::Zero(n, n);
  dual.selfadjointView<Eigen::Lower>().rankUpdate(Matrix(X), 1.0 / nd);
  dual = dual.selfadjointView<Eigen::Lower>();

  // Spike part n^{-1} sum_{j <= m_bar} lambda_j z_j z_j^T from the regenerated columns of Z.
  Matrix spike = Matrix::Zero(n, n);
  Vector col(n);
  for (std::size_t j = 0; j < m_bar; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      col[i] = provenance->law.sample(provenance->seed, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(j),
                                      StreamRole::Design);
    }
    spike.noalias() += (model.eigenvalue(j + 1) / nd) * (col * col.transpose());
  }
  const Matrix rest = dual - spike;

  const Vector rest_eigs = symmetric_eigenvalues(rest);
  const Vector spike_eigs = symmetric_eigenvalues(spike);
  const Vector dual_eigs = symmetric_eigenvalues(dual);

  DualSplit out;
  out.m_bar = m_bar;
  // D_ns is positive semi-definite in exact arithmetic.
  out.sigma_max_ns = std::max(0.0, rest_eigs.maxCoeff());
  out.sigma_min_ns = std::max(0.0, rest_eigs.minCoeff());
  out.max_ratio = nd * out.sigma_max_ns / (static_cast<double>(d) * model.eigenvalue(m_bar + 1));
  out.min_ratio = nd * out.sigma_min_ns / (static_cast<double>(d) * model.eigenvalue(d));
  out.weyl_violation = -kInf;
  for (std::size_t j = 1; j <= m_bar; ++j) {
    const double s = std::max(0.0, spike_eigs[n - static_cast<Eigen::Index>(j)]);
    const double lam_hat = dual_eigs[n - static_cast<Eigen::Index>(j)];
    out.spike_singular.push_back(s);
    out.sample_eigs.push_back(lam_hat);
    out.weyl_violation = std::max({out.weyl_violation, s + rest_eigs.minCoeff() - lam_hat,
                                   lam_hat - s - rest_eigs.maxCoeff()});
  }
  if (m_bar == 0) out.weyl_violation = 0.0;
  return out;
}

BaiYin bai_yin_check(std::size_t n, std::size_t p, const sampler::EntryLaw& law, std::uint64_t seed,
                     std::size_t reps, unsigned threads) {
  if (p < 1 || n <= p) throw DomainError("bai_yin_check requires n > p >= 1");
  if (reps < 1) throw DomainError("bai_yin_check requires reps >= 1");
  BaiYin out;
  out.n = n;
  out.p = p;
  out.sigma_max.assign(reps, 0.0);
  out.sigma_min.assign(reps, 0.0);
  const double nd = static_cast<double>(n);
  parallel_for(reps, threads, [&](std::size_t r) {
    DesignMatrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
      law.fill_row(seed, r * n + i, StreamRole::BaiYin, {w.row(static_cast<Eigen::Index>(i)).data(), p});
    }
    Matrix gram = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    gram.selfadjointView<Eigen::Lower>().rankUpdate(Matrix(w).transpose(), 1.0 / nd);
    gram = gram.selfadjointView<Eigen::Lower>();
    const Vector ev = symmetric_eigenvalues(gram);
    out.sigma_min[r] = std::sqrt(std::max(0.0, ev.minCoeff()));
    out.sigma_max[r] = std::sqrt(std::max(0.0, ev.maxCoeff()));
  });
  const double rd = static_cast<double>(reps);
  out.mean_max = std::accumulate(out.sigma_max.begin(), out.sigma_max.end(), 0.0) / rd;
  out.mean_min = std::accumulate(out.sigma_min.begin(), out.sigma_min.end(), 0.0) / rd;
  const double root_y = std::sqrt(static_cast<double>(p) / nd);
  out.target_max = 1.0 + root_y;
  out.target_min = 1.0 - root_y;
  out.deviation_max = out.mean_max - out.target_max;
  out.deviation_min = out.mean_min - out.target_min;
  return out;
}

SpectralDiagnostics run_diagnostics(const estimator::DualDecomposition& dd, const model::CovarianceModel& model,
                                    double opnorm_diff, double t) {
  SpectralDiagnostics out;
  const std::size_t m_bar = std::min({model.spike_count(), dd.rank(), model.dimension() - 1});
  if (m_bar >= 1) out.eig = eig_ratio(dd, model, m_bar, m_bar, t);
  out.smallest = smallest_eig_ratio(dd, model);
  for (std::size_t j = 1; j <= m_bar; ++j) {
    try {
      out.projector_dists.push_back(projector_dist(dd, model, j));
    } catch (const DomainError&) {
      out.projector_dists.push_back(kNaN);
    }
  }
  out.opnorm_diff = opnorm_diff;
  return out;
}

}  // namespace mnls::diagnostics
