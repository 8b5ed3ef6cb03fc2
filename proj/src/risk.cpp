#include "mnls/risk.hpp"

#include "mnls/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mnls::risk {

double bias_sq(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
               const Vector& theta) {
  require_dims(static_cast<std::size_t>(theta.size()), model.dimension(), "bias_sq");
  require_dims(dd.dimension(), model.dimension(), "bias_sq design");
  const auto split = estimator::project_rowspace(dd, theta);
  return std::max(0.0, model.quadratic_form(split.residual));
}

double bias_sq(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
               const model::ParameterVector& theta) {
  return bias_sq(model, dd, theta.theta);
}

double variance(const model::CovarianceModel& model, const estimator::DualDecomposition& dd, double sigma) {
  require_dims(dd.dimension(), model.dimension(), "variance");
  if (!(sigma >= 0.0)) throw DomainError("variance: sigma must be >= 0");
  if (sigma == 0.0 || dd.rank() == 0) return 0.0;

  // Rows of B are Lambda^{1/2} U^T x_i, so B B^T = X Sigma X^T.
  const DesignMatrix& x = dd.design();
  const Eigen::ArrayXd root = model.eigenvalues().array().sqrt();
  DesignMatrix b(x.rows(), x.cols());
  Vector row(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    row = x.row(i).transpose();
    model.basis().apply_transpose_inplace(row);
    b.row(i) = (row.array() * root).matrix().transpose();
  }
  Matrix gram = Matrix::Zero(x.rows(), x.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(b);
  gram = gram.selfadjointView<Eigen::Lower>();

  const double n = static_cast<double>(dd.samples());
  double trace = 0.0;
  for (std::size_t j = 1; j <= dd.rank(); ++j) {
    const auto v = dd.dual_vectors().col(static_cast<Eigen::Index>(j - 1));
    const double lam = dd.eigenvalue(j);
    // u_hat^T Sigma u_hat = v^T X Sigma X^T v / (n lambda_hat).
    trace += v.dot(gram * v) / (n * lam * lam);
  }
  return sigma * sigma / n * trace;
}

RiskReport conditional_risk(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                            const model::ParameterVector& theta, double sigma, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RiskReport r;
  r.bias_sq = bias_sq(model, dd, theta);
  r.variance = variance(model, dd, sigma);
  r.total = r.bias_sq + r.variance;
  r.null_risk = model::null_risk(model, theta);
  r.normalized_defined = r.null_risk > 0.0;
  r.normalized = r.normalized_defined ? r.total / r.null_risk : kNaN;
  r.n = dd.samples();
  r.d = dd.dimension();
  r.seed = seed;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

McEstimate mc_risk_check(const sampler::Dataset& data, const estimator::DualDecomposition& dd,
                         std::size_t noise_draws, std::size_t new_draws, std::uint64_t seed,
                         unsigned threads) {
  if (noise_draws < 1000 || new_draws < 1000) throw DomainError("mc_risk_check needs R_noise, R_new >= 1000");
  const auto& model = *data.model;
  const DesignMatrix& x = *data.X;
  const std::size_t n = data.samples();
  const std::size_t d = data.dimension();
  const Vector& theta = data.theta.theta;
  const sampler::EntryLaw design_law = data.provenance ? data.provenance->law : sampler::EntryLaw::gaussian();
  const Vector clean = x * theta;
  const Eigen::ArrayXd root = model.eigenvalues().array().sqrt();

  std::vector<double> inner_means(noise_draws, 0.0);
  parallel_for(noise_draws, threads, [&](std::size_t r) {
    Vector y = clean;
    for (std::size_t i = 0; i < n; ++i) {
      y[static_cast<Eigen::Index>(i)] +=
          data.sigma * data.noise_law.sample(seed, r, static_cast<std::uint32_t>(i), StreamRole::NoiseRedraw);
    }
    const Vector err = theta - estimator::fit_mnls(dd, y).theta;
    // X_new^T err = z^T Lambda^{1/2} U^T err for X_new = U Lambda^{1/2} z.
    Vector g = model.basis().apply_transpose(err);
    g.array() *= root;
    std::vector<double> z(d);
    double acc = 0.0;
    for (std::size_t s = 0; s < new_draws; ++s) {
      design_law.fill_row(seed, static_cast<std::uint64_t>(r) * new_draws + s, StreamRole::NewDesign, z);
      const double pred = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(d)).dot(g);
      acc += pred * pred;
    }
    inner_means[r] = acc / static_cast<double>(new_draws);
  });

  const double rn = static_cast<double>(noise_draws);
  const double mean = std::accumulate(inner_means.begin(), inner_means.end(), 0.0) / rn;
  double ss = 0.0;
  for (double v : inner_means) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (rn - 1.0));
  return McEstimate{mean, sd / std::sqrt(rn), noise_draws * new_draws};
}

model::ParameterVector theta_from_policy(const model::CovarianceModel& model, const ThetaPolicy& policy) {
  std::vector<double> weights = policy.spike_weights;
  if (weights.empty()) weights.assign(model.spike_count(), 1.0);
  return model::make_theta(model, policy.delta, policy.norm, weights, policy.bulk_seed);
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto count = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * count));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

FieldSummary summarize(const std::vector<double>& values) {
  FieldSummary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.median = nearest_rank_quantile(values, 0.5);
  s.q05 = nearest_rank_quantile(values, 0.05);
  s.q95 = nearest_rank_quantile(values, 0.95);
  return s;
}

ReplicateAggregate replicate_risk(const model::ModelFamily& family, std::size_t n,
                                  const ThetaPolicy& policy, double sigma,
                                  const sampler::EntryLaw& law, std::size_t replicates,
                                  std::uint64_t base_seed, unsigned threads,
                                  const model::BasisSpec& basis) {
  if (replicates < 1) throw DomainError("replicate_risk needs R >= 1");
  const model::CovarianceModel cov = model::realize(family, n, basis);
  const model::ParameterVector theta = theta_from_policy(cov, policy);

  ReplicateAggregate agg;
  agg.reports.resize(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    const std::uint64_t seed = base_seed + i;
    auto x = std::make_shared<const DesignMatrix>(sampler::sample_design(cov, n, law, seed));
    const auto dd = estimator::dual_decompose(std::move(x));
    agg.reports[i] = conditional_risk(cov, dd, theta, sigma, seed);
  });

  auto field = [&](auto getter) {
    std::vector<double> v;
    v.reserve(replicates);
    for (const auto& r : agg.reports) v.push_back(getter(r));
    return summarize(v);
  };
  agg.bias_sq = field([](const RiskReport& r) { return r.bias_sq; });
  agg.variance = field([](const RiskReport& r) { return r.variance; });
  agg.total = field([](const RiskReport& r) { return r.total; });
  agg.null_risk = field([](const RiskReport& r) { return r.null_risk; });
  agg.normalized = field([](const RiskReport& r) { return r.normalized; });
  return agg;
}

}  // namespace mnls::risk
