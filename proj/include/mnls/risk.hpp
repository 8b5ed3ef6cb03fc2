#pragma once

// Exact conditional risk of the minimum-norm interpolator given X:
//   R_X = theta^T (I - Q_hat) Sigma (I - Q_hat) theta + (sigma^2 / n) Tr(Sigma_hat^dagger Sigma),
// plus a brute-force Monte Carlo oracle and replicate-level aggregation.

#include "mnls/common.hpp"
#include "mnls/estimator.hpp"
#include "mnls/model.hpp"
#include "mnls/sampler.hpp"

#include <vector>

namespace mnls::risk {

struct RiskReport {
  double bias_sq = 0.0;
  double variance = 0.0;
  double total = 0.0;
  double null_risk = 0.0;
  /// total / null_risk; NaN and normalized_defined == false when null_risk == 0.
  double normalized = kNaN;
  bool normalized_defined = false;
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

double bias_sq(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
               const Vector& theta);
double bias_sq(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
               const model::ParameterVector& theta);

/// (sigma^2/n) sum_{j <= rank} lambda_hat_j^{-1} u_hat_j^T Sigma u_hat_j. Exact for any noise
/// law with variance sigma^2 that is independent of X.
double variance(const model::CovarianceModel& model, const estimator::DualDecomposition& dd, double sigma);

RiskReport conditional_risk(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                            const model::ParameterVector& theta, double sigma, std::uint64_t seed = 0);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

/// Redraws the noise R_noise times, refits, and averages the squared prediction error over
/// R_new fresh test points per refit. The standard error is taken across noise draws.
McEstimate mc_risk_check(const sampler::Dataset& data, const estimator::DualDecomposition& dd,
                         std::size_t noise_draws, std::size_t new_draws, std::uint64_t seed,
                         unsigned threads = 1);

struct ThetaPolicy {
  double delta = 0.0;
  double norm = 1.0;
  std::vector<double> spike_weights;  // empty means all ones
  std::uint64_t bulk_seed = 0;
  bool operator==(const ThetaPolicy&) const = default;
};

model::ParameterVector theta_from_policy(const model::CovarianceModel& model, const ThetaPolicy& policy);

/// Nearest-rank quantile of an unsorted sample; q in (0, 1].
double nearest_rank_quantile(std::vector<double> values, double q);

struct FieldSummary {
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

FieldSummary summarize(const std::vector<double>& values);

struct ReplicateAggregate {
  std::vector<RiskReport> reports;  // index i used seed base_seed + i
  FieldSummary bias_sq;
  FieldSummary variance;
  FieldSummary total;
  FieldSummary null_risk;
  FieldSummary normalized;
};

ReplicateAggregate replicate_risk(const model::ModelFamily& family, std::size_t n,
                                  const ThetaPolicy& policy, double sigma,
                                  const sampler::EntryLaw& law, std::size_t replicates,
                                  std::uint64_t base_seed, unsigned threads = 1,
                                  const model::BasisSpec& basis = {});

}  // namespace mnls::risk
