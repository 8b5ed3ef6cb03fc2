#include "mnls/bounds.hpp"

#include "mnls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mnls::bounds {

namespace {

void require_spectrum(std::span<const double> lambda) {
  if (lambda.empty()) throw DimensionError("empty spectrum");
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    if (!(lambda[j] > 0.0) || !std::isfinite(lambda[j])) throw DomainError("eigenvalues must be finite and positive");
    if (j > 0 && lambda[j] > lambda[j - 1]) throw DomainError("eigenvalues must be non-increasing");
  }
}

// lambda_j with the convention lambda_{d+1} = 0.
double eig_at(std::span<const double> lambda, std::size_t j) { return j <= lambda.size() ? lambda[j - 1] : 0.0; }

void keep_min(ScanResult& best, double value, std::size_t m, std::size_t outer) {
  if (std::isinf(value)) return;
  if (best.argmin_m == 0 || value < best.value) {
    best.value = value;
    best.argmin_m = m;
    best.argmin_outer = outer;
  }
}

std::size_t scan_limit(std::size_t n, std::size_t d, std::size_t cap) {
  std::size_t limit = std::min(n, d - 1);
  if (cap != 0) limit = std::min(limit, cap);
  return limit;
}

std::vector<double> eigen_prefix(const model::CovarianceModel& model, std::size_t m, bool roots) {
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = roots ? std::sqrt(model.eigenvalue(j + 1)) : model.eigenvalue(j + 1);
  return out;
}

}  // namespace

double GapProfile::value(std::size_t m, double alpha) const {
  if (m < 1 || m > m_max) throw std::out_of_range("gap functional index out of range");
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (alphas[a] == alpha) return functional[a][m - 1];
  }
  throw std::out_of_range("gap functional exponent was not tabulated");
}

GapProfile gap_profile(std::span<const double> lambda, std::size_t m_max, std::span<const double> alphas) {
  require_spectrum(lambda);
  const std::size_t d = lambda.size();
  if (m_max < 1 || m_max >= d) throw DimensionError("gap_profile requires 1 <= m_max < d");
  GapProfile g;
  g.m_max = m_max;
  g.alphas.assign(alphas.begin(), alphas.end());
  g.gaps.resize(d - 1);
  for (std::size_t j = 0; j + 1 < d; ++j) g.gaps[j] = lambda[j] - lambda[j + 1];
  g.min_gaps.resize(d);
  g.min_gaps[0] = g.gaps[0];
  for (std::size_t j = 1; j < d; ++j) g.min_gaps[j] = j + 1 < d ? std::min(g.gaps[j - 1], g.gaps[j]) : g.gaps[j - 1];

  for (std::size_t j = 0; j < m_max; ++j) g.degenerate = g.degenerate || g.min_gaps[j] == 0.0;
  g.functional.resize(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    auto& row = g.functional[a];
    row.resize(m_max);
    double acc = 0.0;
    for (std::size_t j = 0; j < m_max; ++j) {
      acc += g.min_gaps[j] == 0.0 ? kInf : std::pow(lambda[j], alphas[a]) / g.min_gaps[j];
      row[j] = acc;
    }
  }
  return g;
}

double rho_n(std::span<const double> lambda, std::size_t n, std::size_t d, std::size_t m) {
  if (m >= lambda.size()) throw DimensionError("rho_n requires m < number of eigenvalues");
  const double nd = static_cast<double>(n);
  const double r = static_cast<double>(d) * lambda[m] / (nd * lambda[0]);
  return nd * std::max(std::sqrt(r), r);
}

std::size_t max_deterministic_index(const model::CovarianceModel& model, const estimator::DualDecomposition& dd) {
  return std::min(dd.rank(), model.dimension() - 1);
}

std::vector<double> bias_bound_det_all(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                                       const Vector& theta, std::size_t m_max) {
  require_dims(static_cast<std::size_t>(theta.size()), model.dimension(), "bias_bound_det");
  if (m_max > max_deterministic_index(model, dd)) throw DimensionError("bias_bound_det requires m <= min(rank, d-1)");
  std::vector<double> out(m_max, 0.0);
  const double norm_sq = theta.squaredNorm();
  if (norm_sq == 0.0 || m_max == 0) return out;

  const spectral::ProjectorPerturbation perturbation(model, dd, m_max);
  const std::vector<double> tail = model::tail_mass(model, theta);
  const std::vector<double> roots = eigen_prefix(model, m_max, true);
  const std::vector<double> ones(m_max, 1.0);
  for (std::size_t m = 1; m <= m_max; ++m) {
    const double weighted = perturbation.combination_norm(roots, m);
    const double plain = perturbation.combination_norm(ones, m);
    out[m - 1] = 2.0 * (model.eigenvalue(m + 1) + weighted * weighted) * (norm_sq * plain * plain + tail[m]);
  }
  return out;
}

double bias_bound_det(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                      const Vector& theta, std::size_t m) {
  if (m < 1) throw DimensionError("bias_bound_det requires m >= 1");
  return bias_bound_det_all(model, dd, theta, m).back();
}

std::vector<double> variance_bound_det_all(const model::CovarianceModel& model,
                                           const estimator::DualDecomposition& dd, std::size_t m_max,
                                           double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("variance bound: sigma must be >= 0");
  if (m_max > max_deterministic_index(model, dd)) throw DimensionError("variance_bound_det requires m <= min(rank, d-1)");
  std::vector<double> out(m_max, 0.0);
  if (sigma == 0.0 || m_max == 0) return out;
  const std::size_t n = dd.samples();
  if (dd.rank() < n) {
    std::fill(out.begin(), out.end(), kInf);
    return out;
  }
  const double nd = static_cast<double>(n);
  const double s2 = sigma * sigma;
  const double smallest = dd.eigenvalue(n);

  const spectral::ProjectorPerturbation perturbation(model, dd, m_max);
  const std::vector<double> lambdas = eigen_prefix(model, m_max, false);
  double max_ratio = 0.0;
  double scaled_dist = 0.0;
  double spike_mass = 0.0;
  for (std::size_t m = 1; m <= m_max; ++m) {
    const double lam = model.eigenvalue(m);
    max_ratio = std::max(max_ratio, lam / dd.eigenvalue(m));
    scaled_dist += perturbation.distance(m) / lam;
    spike_mass += lam;
    const double next = model.eigenvalue(m + 1);
    const double md = static_cast<double>(m);
    const double weighted = perturbation.combination_norm(lambdas, m);
    out[m - 1] = s2 * md / nd * (1.0 + next / lam) * max_ratio + s2 / nd * max_ratio * scaled_dist * spike_mass +
                 2.0 * s2 * md / (nd * smallest) * weighted + s2 * next / smallest;
  }
  return out;
}

double variance_bound_det(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                          std::size_t m, double sigma) {
  if (m < 1) throw DimensionError("variance_bound_det requires m >= 1");
  return variance_bound_det_all(model, dd, m, sigma).back();
}

ThetaProfile ThetaProfile::from(const model::CovarianceModel& model, const Vector& theta) {
  return ThetaProfile{theta.squaredNorm(), model::tail_mass(model, theta)};
}

double bias_thm2_term(std::span<const double> lambda, const GapProfile& gaps, const ThetaProfile& theta,
                      std::size_t n, std::size_t m, double t, double C) {
  if (theta.norm_sq == 0.0) return 0.0;
  const std::size_t d = lambda.size();
  const double l1 = lambda[0];
  const double rho = rho_n(lambda, n, d, m);
  const double g = std::max({static_cast<double>(m), rho * rho, t}) / static_cast<double>(n);
  const double half = gaps.value(m, 0.5);
  const double zero = gaps.value(m, 0.0);
  if (std::isinf(half) || std::isinf(zero)) return kInf;
  const double left = eig_at(lambda, m + 1) / l1 + C * l1 * half * half * g;
  const double right = C * l1 * l1 * zero * zero * g * theta.norm_sq + theta.tail[m];
  return 2.0 * l1 * left * right;
}

ScanResult bias_bound_thm2(const model::CovarianceModel& model, const ThetaProfile& theta, std::size_t n,
                           const HighProbabilitySettings& settings) {
  if (!(settings.t > 0.0) || !(settings.C > 0.0)) throw DomainError("high-probability bounds need t > 0 and C > 0");
  const std::size_t d = model.dimension();
  require_dims(theta.tail.size(), d + 1, "bias_bound_thm2 theta profile");
  ScanResult best;
  if (theta.norm_sq == 0.0) {
    best.value = 0.0;
    best.argmin_m = 1;
    return best;
  }
  const std::size_t limit = scan_limit(n, d, settings.m_cap);
  const std::vector<double> alphas{0.0, 0.5};
  const GapProfile gaps = gap_profile(model.eigenvalue_span(), limit, alphas);
  for (std::size_t m = 1; m <= limit; ++m) {
    keep_min(best, bias_thm2_term(model.eigenvalue_span(), gaps, theta, n, m, settings.t, settings.C), m, 0);
  }
  best.degenerate = best.argmin_m == 0;
  return best;
}

double variance_thm2_term(std::span<const double> lambda, const GapProfile& gaps, std::size_t n,
                          std::size_t m_outer, std::size_t m, double sigma, double t, double C) {
  if (sigma == 0.0) return 0.0;
  const std::size_t d = lambda.size();
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double l1 = lambda[0];
  const double s2 = sigma * sigma;
  const double g1 = gaps.value(m, 1.0);
  if (std::isinf(g1)) return kInf;

  const double alpha = C * std::sqrt(std::max(nd, t) / dd);
  const double beta = C * std::sqrt(std::max(static_cast<double>(m_outer), t) / nd);
  const double delta = std::max(C * std::sqrt(std::max(static_cast<double>(m), t) / nd), rho_n(lambda, n, d, m));
  const double md = static_cast<double>(m);

  const double first = s2 / nd *
                       (1.0 + dd * eig_at(lambda, m_outer + 1) / (nd * lambda[m - 1]) * (1.0 + alpha) + beta) *
                       (2.0 * md + l1 * g1 * delta);
  if (alpha >= 1.0) return kInf;
  const double second =
      s2 / (1.0 - alpha) * (2.0 * delta * md * g1 + nd * eig_at(lambda, m + 1) / l1) * l1 / (dd * lambda[d - 1]);
  return first + second;
}

ScanResult variance_bound_thm2(const model::CovarianceModel& model, std::size_t n, double sigma,
                               const HighProbabilitySettings& settings) {
  if (!(settings.t > 0.0) || !(settings.C > 0.0)) throw DomainError("high-probability bounds need t > 0 and C > 0");
  if (!(sigma >= 0.0)) throw DomainError("variance bound: sigma must be >= 0");
  ScanResult best;
  if (sigma == 0.0) {
    best.value = 0.0;
    best.argmin_m = 1;
    best.argmin_outer = 1;
    return best;
  }
  const std::size_t d = model.dimension();
  const std::size_t limit = scan_limit(n, d, settings.m_cap);
  const std::vector<double> alphas{1.0};
  const GapProfile gaps = gap_profile(model.eigenvalue_span(), limit, alphas);
  for (std::size_t outer = 1; outer <= limit; ++outer) {
    for (std::size_t m = 1; m <= outer; ++m) {
      keep_min(best,
               variance_thm2_term(model.eigenvalue_span(), gaps, n, outer, m, sigma, settings.t, settings.C), m,
               outer);
    }
  }
  best.degenerate = best.argmin_m == 0;
  return best;
}

RateShapes thm1_rates(std::span<const double> lambda, std::size_t n) {
  if (lambda.empty() || n == 0) throw DimensionError("thm1_rates needs n >= 1 and a non-empty spectrum");
  const double nd = static_cast<double>(n);
  const double d = static_cast<double>(lambda.size());
  const double l1 = lambda[0];
  RateShapes r;
  r.bias = std::max(1.0 / nd, d / (nd * l1));
  r.variance_spike = std::sqrt(nd * l1 / d * std::max(1.0, l1 / d));
  r.variance_bulk = nd / d;
  return r;
}

RateShapes thm1_rates(const model::CovarianceModel& model, std::size_t n) {
  return thm1_rates(model.eigenvalue_span(), n);
}

double blt_bias_bound(const model::CovarianceModel& model, const DesignMatrix& X, double theta_norm_sq, double tol,
                      int max_iter) {
  return blt_bias_bound(theta_norm_sq, diagnostics::op_norm_diff(X, model, tol, max_iter));
}

double minimax_proxy(const DesignMatrix& X, double sigma, std::size_t d, double c) {
  double frob = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < X.cols(); ++k) frob += X(i, k) * X(i, k);
  }
  if (frob == 0.0) return kInf;
  const double dd = static_cast<double>(d);
  return c * dd * dd * sigma * sigma / frob;
}

double kl_projector_bound(std::span<const double> lambda, double opnorm_diff, std::size_t j) {
  if (j < 1 || j >= lambda.size()) throw DimensionError("kl_projector_bound requires 1 <= j < d");
  if (!(opnorm_diff >= 0.0)) throw DomainError("operator norm must be >= 0");
  const double left = j >= 2 ? lambda[j - 2] - lambda[j - 1] : kInf;
  const double right = lambda[j - 1] - lambda[j];
  const double gap = std::min(left, right);
  if (gap == 0.0) return kInf;
  return 4.0 * opnorm_diff / gap;
}

BoundReport evaluate_bounds(const model::CovarianceModel& model, const estimator::DualDecomposition& dd,
                            const Vector& theta, double sigma, double opnorm_diff, const BoundSettings& settings) {
  BoundReport r;
  const std::size_t n = dd.samples();
  const std::size_t d = model.dimension();
  const std::size_t spikes = std::min(model.spike_count(), d - 1);
  const std::size_t cap = settings.m_cap != 0 ? settings.m_cap : std::max<std::size_t>(spikes, 1);
  const std::size_t m_det = std::min(cap, max_deterministic_index(model, dd));

  if (m_det >= 1) {
    const auto bias = bias_bound_det_all(model, dd, theta, m_det);
    const auto var = variance_bound_det_all(model, dd, m_det, sigma);
    for (std::size_t m = 1; m <= m_det; ++m) {
      if (r.lemma1_m == 0 || bias[m - 1] < r.lemma1_bias) {
        r.lemma1_bias = bias[m - 1];
        r.lemma1_m = m;
      }
      if (r.lemma4_m == 0 || var[m - 1] < r.lemma4_variance) {
        r.lemma4_variance = var[m - 1];
        r.lemma4_m = m;
      }
    }
  }
  r.thm2_bias = bias_bound_thm2(model, ThetaProfile::from(model, theta), n, settings.high_probability);
  r.thm2_variance = variance_bound_thm2(model, n, sigma, settings.high_probability);
  r.thm1 = thm1_rates(model, n);
  r.blt_bias = blt_bias_bound(theta.squaredNorm(), opnorm_diff);
  r.minimax_proxy = minimax_proxy(dd.design(), sigma, d, settings.minimax_c);
  r.rho_n = rho_n(model.eigenvalue_span(), n, d, std::max<std::size_t>(spikes, 1));
  for (std::size_t j = 1; j <= spikes; ++j) r.kl_projector.push_back(kl_projector_bound(model.eigenvalue_span(), opnorm_diff, j));
  r.C = settings.high_probability.C;
  r.t = settings.high_probability.t;
  return r;
}

}  // namespace mnls::bounds
