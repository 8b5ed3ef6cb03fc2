#pragma once

// Empirical spectral checks on a sampled design: eigenvalue consistency, the smallest
// eigenvalue, eigenprojector distances, ||Sigma_hat - Sigma||, the spike/non-spike split of
// the dual matrix and the extreme singular values of pure noise matrices.

#include "mnls/common.hpp"
#include "mnls/estimator.hpp"
#include "mnls/model.hpp"
#include "mnls/sampler.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace mnls::diagnostics {

struct EigRatio {
  std::vector<double> ratios;  // |lambda_hat_k - lambda_k| / lambda_k, k = 1..m
  double max = 0.0;
  double spike_term = 0.0;     // d lambda_{m_bar+1} / (n lambda_m)
  double sampling_term = 0.0;  // sqrt(max(m_bar, t) / n)
};

/// m_bar = 0 selects the model's spike count. Requires m <= m_bar <= rank and m_bar < d.
EigRatio eig_ratio(const estimator::DualDecomposition& dd, const model::CovarianceModel& model, std::size_t m,
                   std::size_t m_bar = 0, double t = std::log(20.0));

struct SmallestRatio {
  double ratio = 0.0;  // n lambda_hat_n / (d lambda_d)
  bool rank_deficient = false;
};

SmallestRatio smallest_eig_ratio(const estimator::DualDecomposition& dd, const model::CovarianceModel& model);

/// ||P_hat_j - P_j||; throws DomainError when lambda_j is tied with a neighbour.
double projector_dist(const estimator::DualDecomposition& dd, const model::CovarianceModel& model, std::size_t j);

/// Largest |eigenvalue| of v -> X^T X v / n - Sigma v, matrix-free.
double op_norm_diff(const DesignMatrix& X, const model::CovarianceModel& model, double tol = 1e-6,
                    int max_iter = 1000);

/// lambda_1 ||Z_S^T Z_S/n - I|| + 2 sqrt(lambda_1 lambda_{m+1}) s(Z_S) s(Z_perp)
///   + lambda_{m+1} s(Z_perp)^2 + lambda_{m+1}, with s(.) = sigma_max(./sqrt n), Z_S the first
/// m columns of the standardized entries and Z_perp the rest. Requires 1 <= m < d.
double opnorm_chain_bound(const DesignMatrix& Z, const model::CovarianceModel& model, std::size_t m);

struct DualSplit {
  std::size_t m_bar = 0;
  double max_ratio = 0.0;  // n sigma_max(D_ns) / (d lambda_{m_bar+1})
  double min_ratio = 0.0;  // n sigma_min(D_ns) / (d lambda_d)
  double sigma_max_ns = 0.0;
  double sigma_min_ns = 0.0;
  std::vector<double> spike_singular;  // sigma_j(D_s), j = 1..m_bar
  std::vector<double> sample_eigs;     // lambda_hat_j, j = 1..m_bar
  /// Largest violation of sigma_j(D_s) + sigma_min(D_ns) <= lambda_hat_j <= sigma_j(D_s) + sigma_max(D_ns);
  /// <= 0 when the sandwich holds.
  double weyl_violation = 0.0;
};

/// Needs the keyed stream behind X; throws std::invalid_argument for external designs.
DualSplit dual_split(const DesignMatrix& X, const model::CovarianceModel& model,
                     const std::optional<sampler::DesignProvenance>& provenance, std::size_t m_bar);

struct BaiYin {
  std::size_t n = 0;
  std::size_t p = 0;
  double mean_max = 0.0;  // mean sigma_max(W / sqrt n)
  double mean_min = 0.0;
  double target_max = 0.0;  // 1 + sqrt(p/n)
  double target_min = 0.0;
  double deviation_max = 0.0;  // mean_max - target_max
  double deviation_min = 0.0;
  std::vector<double> sigma_max;
  std::vector<double> sigma_min;
};

BaiYin bai_yin_check(std::size_t n, std::size_t p, const sampler::EntryLaw& law, std::uint64_t seed,
                     std::size_t reps, unsigned threads = 1);

/// Per-design bundle used by the sweep.
struct SpectralDiagnostics {
  EigRatio eig;
  SmallestRatio smallest;
  std::vector<double> projector_dists;  // j = 1..m_bar
  double opnorm_diff = 0.0;
};

SpectralDiagnostics run_diagnostics(const estimator::DualDecomposition& dd, const model::CovarianceModel& model,
                                    double opnorm_diff, double t = std::log(20.0));

}  // namespace mnls::diagnostics
