#pragma once

// Closed-form risk bounds: spectral-gap functionals, the deterministic per-design bias and
// variance bounds, the high-probability bounds with an explicit constant C, asymptotic rate
// shapes, the operator-norm bias bound and the minimax proxy.

#include "mnls/common.hpp"
#include "mnls/estimator.hpp"
#include "mnls/model.hpp"
#include "mnls/spectral.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace mnls::bounds {

/// Gaps G_j = lambda_j - lambda_{j+1} and min-gaps Gbar_1 = G_1, Gbar_j = min(G_{j-1}, G_j)
/// (Gbar_d = G_{d-1}). functional[a][m-1] holds sum_{j<=m} lambda_j^alphas[a] / Gbar_j.
struct GapProfile {
  std::vector<double> gaps;      // index j-1, j = 1..d-1
  std::vector<double> min_gaps;  // index j-1, j = 1..d
  std::vector<double> alphas;
  std::vector<std::vector<double>> functional;
  std::size_t m_max = 0;
  /// Some Gbar_j with j <= m_max is zero; affected functional values are +inf.
  bool degenerate = false;

  double min_gap(std::size_t j) const { return min_gaps[j - 1]; }
  /// Looks up a tabulated value; throws std::out_of_range if alpha was not requested.
  double value(std::size_t m, double alpha) const;
};

/// Requires lambda positive and non-increasing, 1 <= m_max < lambda.size().
GapProfile gap_profile(std::span<const double> lambda, std::size_t m_max, std::span<const double> alphas);

/// n * max(sqrt(r), r) with r = d lambda_{m+1} / (n lambda_1).
double rho_n(std::span<const double> lambda, std::size_t n, std::size_t d, std::size_t m);

/// Largest m accepted by the deterministic bounds: min(rank, d - 1).
std::size_t max_deterministic_index(const model::CovarianceModel& model, const estimator::DualDecomposition& dd);

/// 2 (lambda_{m+1} + ||sum_{j<=m} sqrt(lambda_j) dP_j||^2)
///   * (||theta||^2 ||sum_{j<=m} dP_j||^2 + sum_{j>m} ||P_j theta||^2), with dP_j = P_hat_j - P_j.
/// Dominates bias_sq for every design.
double bias_bound_det(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                      const Vector& theta, std::size_t m);
/// Values for m = 1..m_max (entry m-1) sharing one projector factorization.
std::vector<double> bias_bound_det_all(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                                       const Vector& theta, std::size_t m_max);

/// Four-term per-design variance bound; +inf when lambda_hat_n = 0.
double variance_bound_det(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                          std::size_t m, double sigma);
std::vector<double> variance_bound_det_all(const model::CovarianceModel& model,
                                           const estimator::DualDecomposition& dd, std::size_t m_max,
                                           double sigma);

/// ||theta||^2 and tail[m] = sum_{j>m} ||P_j theta||^2 for m = 0..d.
struct ThetaProfile {
  double norm_sq = 0.0;
  std::vector<double> tail;

  static ThetaProfile from(const model::CovarianceModel& model, const Vector& theta);
};

struct ScanResult {
  double value = kInf;
  std::size_t argmin_m = 0;
  std::size_t argmin_outer = 0;  // outer index for double scans
  /// Every grid point evaluated to +inf.
  bool degenerate = false;
};

struct HighProbabilitySettings {
  double t = std::log(20.0);
  double C = 1.0;
  /// Upper limit of the m scan; 0 means min(n, d - 1).
  std::size_t m_cap = 0;
  bool operator==(const HighProbabilitySettings&) const = default;
};

/// Bracketed bias expression at a single m.
double bias_thm2_term(std::span<const double> lambda, const GapProfile& gaps, const ThetaProfile& theta,
                      std::size_t n, std::size_t m, double t, double C);
ScanResult bias_bound_thm2(const model::CovarianceModel& model, const ThetaProfile& theta, std::size_t n,
                           const HighProbabilitySettings& settings = {});

/// Two-term variance expression at (m_outer, m), m <= m_outer.
double variance_thm2_term(std::span<const double> lambda, const GapProfile& gaps, std::size_t n,
                          std::size_t m_outer, std::size_t m, double sigma, double t, double C);
ScanResult variance_bound_thm2(const model::CovarianceModel& model, std::size_t n, double sigma,
                               const HighProbabilitySettings& settings = {});

struct RateShapes {
  double bias = 0.0;       // max(1/n, d/(n lambda_1))
  double variance_spike = 0.0;  // sqrt((n lambda_1/d) max(1, lambda_1/d))
  double variance_bulk = 0.0;   // n/d
};

RateShapes thm1_rates(std::span<const double> lambda, std::size_t n);
RateShapes thm1_rates(const model::CovarianceModel& model, std::size_t n);

/// ||theta||^2 ||Sigma - X^T X / n||.
double blt_bias_bound(const model::CovarianceModel& model, const DesignMatrix& X, double theta_norm_sq,
                      double tol = 1e-6, int max_iter = 1000);
/// Same with an already measured operator norm.
inline double blt_bias_bound(double theta_norm_sq, double opnorm_diff) { return theta_norm_sq * opnorm_diff; }

/// c d^2 sigma^2 / ||X||_F^2; +inf for X = 0.
double minimax_proxy(const DesignMatrix& X, double sigma, std::size_t d, double c = 1.0);

/// 4 opnorm_diff / Gbar_j; +inf when Gbar_j = 0.
double kl_projector_bound(std::span<const double> lambda, double opnorm_diff, std::size_t j);

struct BoundSettings {
  HighProbabilitySettings high_probability;
  /// Largest m in the deterministic scans; 0 means the model's spike count (at least 1).
  std::size_t m_cap = 0;
  double minimax_c = 1.0;
  bool operator==(const BoundSettings&) const = default;
};

struct BoundReport {
  double lemma1_bias = kInf;
  std::size_t lemma1_m = 0;
  double lemma4_variance = kInf;
  std::size_t lemma4_m = 0;
  ScanResult thm2_bias;
  ScanResult thm2_variance;
  RateShapes thm1;
  double blt_bias = kInf;
  double minimax_proxy = kInf;
  double rho_n = 0.0;            // at m = spike count
  std::vector<double> kl_projector;  // j = 1..spike count
  double C = 1.0;
  double t = 0.0;
};

/// Evaluates every bound for one design. opnorm_diff is ||Sigma_hat - Sigma||, measured by the caller.
BoundReport evaluate_bounds(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                            const Vector& theta, double sigma, double opnorm_diff,
                            const BoundSettings& settings = {});

}  // namespace mnls::bounds
