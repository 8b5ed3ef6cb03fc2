#include "mnls/model.hpp"

#include "mnls/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mnls::model {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void check_grid(std::span<const std::size_t> grid) {
  if (grid.size() < 3) throw ValidationError("n_grid must contain at least 3 points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw ValidationError("n_grid not increasing");
  }
}

Vector spike_values(const SpikeSpec& spec, std::size_t n, std::size_t d) {
  Vector values(static_cast<Eigen::Index>(spec.spike_count()));
  for (std::size_t j = 0; j < spec.spike_count(); ++j) {
    values[static_cast<Eigen::Index>(j)] = spec.spike_rules[j].evaluate(n, d);
  }
  return values;
}

}  // namespace

double GrowthRule::evaluate(std::size_t n, std::size_t d) const {
  return scale * std::pow(static_cast<double>(d), d_exponent) *
         std::pow(static_cast<double>(n), n_exponent);
}

std::size_t DimRule::dimension(std::size_t n) const {
  const double x = kappa * std::pow(static_cast<double>(n), power);
  // Integral products like 1 * 10^2 must not round up through pow() noise.
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(x));
}

void SpikeSpec::validate() const {
  if (spike_rules.empty()) throw ValidationError("spike_rules must not be empty");
  for (std::size_t j = 0; j < spike_rules.size(); ++j) {
    const auto& r = spike_rules[j];
    if (!(r.scale > 0.0)) throw ValidationError("spike " + std::to_string(j + 1) + ": scale must be > 0");
    if (r.d_exponent < 0.0 || r.n_exponent < 0.0) {
      throw ValidationError("spike " + std::to_string(j + 1) + ": exponents must be >= 0");
    }
  }
  if (!(bulk.c2 > 0.0) || bulk.c1 < bulk.c2) throw ValidationError("bulk profile requires c1 >= c2 > 0");
  if (!(dim.kappa > 0.0) || !(dim.power > 1.0)) throw ValidationError("dim rule requires kappa > 0 and p > 1");
}

// ---------------------------------------------------------------------------------------------
// OrthogonalBasis

OrthogonalBasis OrthogonalBasis::identity(std::size_t d) { return OrthogonalBasis(d, nullptr); }

OrthogonalBasis OrthogonalBasis::householder(std::size_t d, std::uint64_t seed,
                                             std::size_t reflections) {
  std::vector<Vector> normals;
  normals.reserve(reflections);
  for (std::size_t r = 0; r < reflections; ++r) {
    Vector w(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      w[static_cast<Eigen::Index>(k)] =
          keyed_normal_pair(seed, r, static_cast<std::uint32_t>(k), StreamRole::Basis).first;
    }
    normals.push_back(std::move(w));
  }
  return from_normals(d, std::move(normals));
}

OrthogonalBasis OrthogonalBasis::from_normals(std::size_t d, std::vector<Vector> normals) {
  for (auto& w : normals) {
    require_dims(static_cast<std::size_t>(w.size()), d, "reflection normal");
    const double norm = w.norm();
    if (!(norm > 0.0)) throw ValidationError("reflection normal must be nonzero");
    w /= norm;
  }
  return OrthogonalBasis(d, std::make_shared<const std::vector<Vector>>(std::move(normals)));
}

void OrthogonalBasis::apply_inplace(Eigen::Ref<Vector> v) const {
  if (is_identity()) return;
  for (auto it = normals_->rbegin(); it != normals_->rend(); ++it) {
    v.noalias() -= (2.0 * it->dot(v)) * (*it);
  }
}

void OrthogonalBasis::apply_transpose_inplace(Eigen::Ref<Vector> v) const {
  if (is_identity()) return;
  for (const auto& w : *normals_) v.noalias() -= (2.0 * w.dot(v)) * w;
}

Vector OrthogonalBasis::apply(const Vector& coords) const {
  require_dims(static_cast<std::size_t>(coords.size()), dim_, "OrthogonalBasis::apply");
  Vector out = coords;
  apply_inplace(out);
  return out;
}

Vector OrthogonalBasis::apply_transpose(const Vector& v) const {
  require_dims(static_cast<std::size_t>(v.size()), dim_, "OrthogonalBasis::apply_transpose");
  Vector out = v;
  apply_transpose_inplace(out);
  return out;
}

Vector OrthogonalBasis::column(std::size_t j) const {
  if (j < 1 || j > dim_) throw DimensionError("basis column index out of range");
  Vector e = Vector::Zero(static_cast<Eigen::Index>(dim_));
  e[static_cast<Eigen::Index>(j - 1)] = 1.0;
  apply_inplace(e);
  return e;
}

Matrix OrthogonalBasis::dense() const {
  Matrix u = Matrix::Identity(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Vector col = u.col(c);
    apply_inplace(col);
    u.col(c) = col;
  }
  return u;
}

// ---------------------------------------------------------------------------------------------
// CovarianceModel

CovarianceModel::CovarianceModel(Vector eigenvalues, OrthogonalBasis basis, std::size_t spike_count)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)), spike_count_(spike_count) {
  const auto d = static_cast<std::size_t>(eigenvalues_.size());
  if (d == 0) throw ValidationError("covariance model needs d >= 1");
  require_dims(basis_.dimension(), d, "CovarianceModel basis");
  if (spike_count_ > d) throw ValidationError("spike count exceeds dimension");
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
    if (!(eigenvalues_[k] > 0.0) || !std::isfinite(eigenvalues_[k])) {
      throw ValidationError("eigenvalue " + std::to_string(k + 1) + " must be finite and > 0");
    }
    if (k > 0 && eigenvalues_[k] > eigenvalues_[k - 1]) {
      throw ValidationError("eigenvalue " + std::to_string(k + 1) + " breaks non-increasing order");
    }
  }
}

Vector CovarianceModel::apply_sigma(const Vector& v) const {
  Vector c = basis_.apply_transpose(v);
  c.array() *= eigenvalues_.array();
  basis_.apply_inplace(c);
  return c;
}

double CovarianceModel::quadratic_form(const Vector& v) const {
  const Vector c = basis_.apply_transpose(v);
  return (eigenvalues_.array() * c.array().square()).sum();
}

Matrix CovarianceModel::dense() const {
  if (dimension() > 4096) throw DimensionError("refusing to densify a covariance with d > 4096");
  const Matrix u = basis_.dense();
  return u * eigenvalues_.asDiagonal() * u.transpose();
}

// ---------------------------------------------------------------------------------------------
// Construction

CovarianceModel realize(const SpikeSpec& spec, std::size_t n, const BasisSpec& basis) {
  spec.validate();
  if (n < 2) throw ValidationError("realize requires n >= 2");
  const std::size_t d = spec.dim.dimension(n);
  const std::size_t m = spec.spike_count();
  if (d <= m) throw ValidationError("dimension d(n) must exceed the spike count");

  const Vector spikes = spike_values(spec, n, d);
  for (std::size_t j = 0; j < m; ++j) {
    const double v = spikes[static_cast<Eigen::Index>(j)];
    if (!(v > spec.bulk.c1)) {
      throw ValidationError("spike " + std::to_string(j + 1) + " value " + fmt(v) +
                            " does not exceed bulk level c1=" + fmt(spec.bulk.c1));
    }
    if (j > 0 && !(v < spikes[static_cast<Eigen::Index>(j - 1)])) {
      throw ValidationError("spike " + std::to_string(j + 1) + " is not strictly below spike " +
                            std::to_string(j));
    }
  }

  Vector lambda(static_cast<Eigen::Index>(d));
  lambda.head(static_cast<Eigen::Index>(m)) = spikes;
  const std::size_t bulk = d - m;
  for (std::size_t k = 0; k < bulk; ++k) {
    const double frac = bulk > 1 ? static_cast<double>(k) / static_cast<double>(bulk - 1) : 0.0;
    lambda[static_cast<Eigen::Index>(m + k)] = spec.bulk.c1 + (spec.bulk.c2 - spec.bulk.c1) * frac;
  }

  OrthogonalBasis u = basis.kind == BasisSpec::Kind::Householder
                          ? OrthogonalBasis::householder(d, basis.seed, basis.reflections)
                          : OrthogonalBasis::identity(d);
  return CovarianceModel(std::move(lambda), std::move(u), m);
}

CovarianceModel realize(const ModelFamily& family, std::size_t n, const BasisSpec& basis) {
  if (const auto* spec = std::get_if<SpikeSpec>(&family)) return realize(*spec, n, basis);
  const auto& rule = std::get<EquicorrelatedRule>(family);
  if (n < 2) throw ValidationError("realize requires n >= 2");
  return equicorrelated(rule.dim.dimension(n), rule.a);
}

std::size_t dimension_at(const ModelFamily& family, std::size_t n) {
  return std::visit([n](const auto& f) { return f.dim.dimension(n); }, family);
}

std::size_t spike_count(const ModelFamily& family) {
  if (const auto* spec = std::get_if<SpikeSpec>(&family)) return spec->spike_count();
  return 1;
}

CovarianceModel equicorrelated(std::size_t d, double a) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("equicorrelated: a must lie in (0,1), got " + fmt(a));
  if (d < 2) throw DomainError("equicorrelated: d must be >= 2");
  Vector lambda = Vector::Constant(static_cast<Eigen::Index>(d), 1.0 - a);
  lambda[0] = 1.0 + static_cast<double>(d - 1) * a;
  // The reflection across (e_1 - 1/sqrt(d)) swaps e_1 with the normalized all-ones vector.
  Vector normal = Vector::Constant(static_cast<Eigen::Index>(d), -1.0 / std::sqrt(static_cast<double>(d)));
  normal[0] += 1.0;
  std::vector<Vector> normals;
  normals.push_back(std::move(normal));
  return CovarianceModel(std::move(lambda), OrthogonalBasis::from_normals(d, std::move(normals)), 1);
}

// ---------------------------------------------------------------------------------------------
// Validation

bool HdlssReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const HdlssCheck& c) { return c.passed; });
}

const HdlssCheck* HdlssReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

HdlssReport validate_hdlss(const SpikeSpec& spec, std::span<const std::size_t> n_grid) {
  check_grid(n_grid);
  {
    // The dimension rule is judged by the dim_growth check below rather than rejected up front.
    SpikeSpec rules = spec;
    rules.dim = DimRule{};
    rules.validate();
  }
  HdlssReport report;
  const std::size_t m = spec.spike_count();

  // d(n) > n and d(n)/n increasing.
  {
    HdlssCheck c{"dim_growth", true, ""};
    double prev = -1.0;
    for (std::size_t n : n_grid) {
      const std::size_t d = spec.dim.dimension(n);
      const double ratio = static_cast<double>(d) / static_cast<double>(n);
      if (d <= n) {
        c.passed = false;
        c.detail = "d(" + std::to_string(n) + ")=" + std::to_string(d) + " does not exceed n";
        break;
      }
      if (!(ratio > prev)) {
        c.passed = false;
        c.detail = "d/n not strictly increasing at n=" + std::to_string(n);
        break;
      }
      prev = ratio;
    }
    report.checks.push_back(c);
  }

  // Strict spike ordering above the bulk at every grid point.
  {
    HdlssCheck c{"spike_ordering", true, ""};
    for (std::size_t n : n_grid) {
      const std::size_t d = spec.dim.dimension(n);
      const Vector s = spike_values(spec, n, d);
      for (std::size_t j = 0; j < m && c.passed; ++j) {
        const double v = s[static_cast<Eigen::Index>(j)];
        if (j > 0 && !(v < s[static_cast<Eigen::Index>(j - 1)])) {
          c.passed = false;
          c.detail = "spike " + std::to_string(j + 1) + " ties or exceeds spike " +
                     std::to_string(j) + " at n=" + std::to_string(n);
        } else if (!(v > spec.bulk.c1)) {
          c.passed = false;
          c.detail = "spike " + std::to_string(j + 1) + " not above c1 at n=" + std::to_string(n);
        }
      }
      if (!c.passed) break;
    }
    report.checks.push_back(c);
  }

  // n * lambda_mbar / d increasing.
  {
    HdlssCheck c{"spike_signal", true, ""};
    double prev = -1.0;
    for (std::size_t n : n_grid) {
      const std::size_t d = spec.dim.dimension(n);
      const double v = static_cast<double>(n) * spec.spike_rules[m - 1].evaluate(n, d) / static_cast<double>(d);
      if (!(v > prev)) {
        c.passed = false;
        c.detail = "n*lambda_mbar/d not strictly increasing at n=" + std::to_string(n);
        break;
      }
      prev = v;
    }
    report.checks.push_back(c);
  }

  // lambda_j / lambda_{j+1} bounded below on the grid; the minimum is reported, no threshold.
  {
    HdlssCheck c{"spike_ratio", true, ""};
    double min_ratio = kInf;
    for (std::size_t n : n_grid) {
      const std::size_t d = spec.dim.dimension(n);
      const Vector s = spike_values(spec, n, d);
      for (std::size_t j = 0; j < m; ++j) {
        const double next = j + 1 < m ? s[static_cast<Eigen::Index>(j + 1)] : spec.bulk.c1;
        min_ratio = std::min(min_ratio, s[static_cast<Eigen::Index>(j)] / next);
      }
    }
    c.passed = std::isfinite(min_ratio) && min_ratio > 0.0;
    c.detail = "min lambda_j/lambda_{j+1} over grid = " + fmt(min_ratio);
    report.checks.push_back(c);
  }

  {
    HdlssCheck c{"bulk_range", spec.bulk.c1 >= spec.bulk.c2 && spec.bulk.c2 > 0.0,
                 "bulk in [" + fmt(spec.bulk.c2) + ", " + fmt(spec.bulk.c1) + "]"};
    report.checks.push_back(c);
  }
  return report;
}

// ---------------------------------------------------------------------------------------------
// Functionals

double null_risk(const CovarianceModel& model, const Vector& theta) {
  require_dims(static_cast<std::size_t>(theta.size()), model.dimension(), "null_risk");
  return model.quadratic_form(theta);
}

double null_risk(const CovarianceModel& model, const ParameterVector& theta) {
  return null_risk(model, theta.theta);
}

ParameterVector make_theta(const CovarianceModel& model, double delta, double norm,
                           std::span<const double> spike_weights, std::uint64_t bulk_seed) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("make_theta: delta must lie in [0,1]");
  if (!(norm > 0.0)) throw DomainError("make_theta: L must be > 0");
  const std::size_t d = model.dimension();
  const std::size_t m = model.spike_count();
  require_dims(spike_weights.size(), m, "make_theta spike_weights");

  Vector coords = Vector::Zero(static_cast<Eigen::Index>(d));
  if (delta < 1.0) {
    double w2 = 0.0;
    for (double w : spike_weights) w2 += w * w;
    if (!(w2 > 0.0)) throw DomainError("make_theta: spike_weights are all zero while delta < 1");
    const double scale = std::sqrt(1.0 - delta) * norm / std::sqrt(w2);
    for (std::size_t j = 0; j < m; ++j) coords[static_cast<Eigen::Index>(j)] = scale * spike_weights[j];
  }
  if (delta > 0.0) {
    if (d == m) throw DomainError("make_theta: no bulk directions available for delta > 0");
    Vector bulk(static_cast<Eigen::Index>(d - m));
    for (std::size_t k = 0; k < d - m; ++k) {
      bulk[static_cast<Eigen::Index>(k)] =
          keyed_normal_pair(bulk_seed, 0, static_cast<std::uint32_t>(k), StreamRole::ThetaBulk).first;
    }
    bulk *= std::sqrt(delta) * norm / bulk.norm();
    coords.tail(static_cast<Eigen::Index>(d - m)) = bulk;
  }
  return ParameterVector{model.basis().apply(coords), delta, norm};
}

double effective_rank(const CovarianceModel& model) {
  return model.eigenvalues().sum() / model.eigenvalues()[0];
}

std::vector<double> tail_mass(const CovarianceModel& model, const Vector& theta) {
  require_dims(static_cast<std::size_t>(theta.size()), model.dimension(), "tail_mass");
  const Vector c = model.basis().apply_transpose(theta);
  const std::size_t d = model.dimension();
  std::vector<double> tail(d + 1, 0.0);
  for (std::size_t m = d; m-- > 0;) {
    tail[m] = tail[m + 1] + c[static_cast<Eigen::Index>(m)] * c[static_cast<Eigen::Index>(m)];
  }
  return tail;
}

}  // namespace mnls::model
