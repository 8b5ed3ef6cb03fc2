#pragma once

// Population side of the spiked covariance experiments: eigenvalue growth rules,
// implicit orthogonal bases, parameter vectors and population functionals.

#include "mnls/common.hpp"

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mnls::model {

/// lambda_j(n) = scale * d(n)^d_exponent * n^n_exponent.
struct GrowthRule {
  double scale = 1.0;
  double d_exponent = 0.0;
  double n_exponent = 0.0;

  double evaluate(std::size_t n, std::size_t d) const;
  bool operator==(const GrowthRule&) const = default;
};

/// Non-spiked eigenvalues ramp linearly from c1 (index spike_count+1) down to c2 (index d).
struct BulkProfile {
  double c1 = 1.0;
  double c2 = 1.0;
  bool operator==(const BulkProfile&) const = default;
};

/// d(n) = ceil(kappa * n^power).
struct DimRule {
  double kappa = 1.0;
  double power = 2.0;

  std::size_t dimension(std::size_t n) const;
  bool operator==(const DimRule&) const = default;
};

struct SpikeSpec {
  std::vector<GrowthRule> spike_rules;
  BulkProfile bulk;
  DimRule dim;

  std::size_t spike_count() const { return spike_rules.size(); }
  /// Throws ValidationError when the rules are structurally unusable (signs, empty list).
  void validate() const;
  bool operator==(const SpikeSpec&) const = default;
};

/// Equicorrelated covariance (unit diagonal, constant off-diagonal a) at d = d(n).
struct EquicorrelatedRule {
  double a = 0.5;
  DimRule dim;
  bool operator==(const EquicorrelatedRule&) const = default;
};

using ModelFamily = std::variant<SpikeSpec, EquicorrelatedRule>;

struct BasisSpec {
  enum class Kind { Identity, Householder };
  Kind kind = Kind::Identity;
  std::uint64_t seed = 0;
  std::size_t reflections = 0;
  bool operator==(const BasisSpec&) const = default;
};

/// Implicit orthogonal operator U = H_1 H_2 ... H_k built from Householder reflections
/// H_i = I - 2 w_i w_i^T. The identity is the empty product. Never densified except on request.
class OrthogonalBasis {
 public:
  static OrthogonalBasis identity(std::size_t d);
  /// k reflections with Gaussian normals drawn from the keyed stream for `seed`.
  static OrthogonalBasis householder(std::size_t d, std::uint64_t seed, std::size_t reflections);
  /// Reflections from explicit (not necessarily normalized, nonzero) normals.
  static OrthogonalBasis from_normals(std::size_t d, std::vector<Vector> normals);

  std::size_t dimension() const { return dim_; }
  bool is_identity() const { return !normals_ || normals_->empty(); }
  std::size_t reflections() const { return normals_ ? normals_->size() : 0; }

  /// U * coords.
  Vector apply(const Vector& coords) const;
  /// U^T * v.
  Vector apply_transpose(const Vector& v) const;
  void apply_inplace(Eigen::Ref<Vector> v) const;
  void apply_transpose_inplace(Eigen::Ref<Vector> v) const;
  /// u_j = U e_j, 1-based.
  Vector column(std::size_t j) const;
  Matrix dense() const;

 private:
  OrthogonalBasis(std::size_t d, std::shared_ptr<const std::vector<Vector>> normals)
      : dim_(d), normals_(std::move(normals)) {}

  std::size_t dim_ = 0;
  std::shared_ptr<const std::vector<Vector>> normals_;
};

/// Sigma = U diag(lambda) U^T with lambda non-increasing and strictly positive.
class CovarianceModel {
 public:
  CovarianceModel(Vector eigenvalues, OrthogonalBasis basis, std::size_t spike_count);

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  const Vector& eigenvalues() const { return eigenvalues_; }
  std::span<const double> eigenvalue_span() const {
    return {eigenvalues_.data(), static_cast<std::size_t>(eigenvalues_.size())};
  }
  /// lambda_j, 1-based.
  double eigenvalue(std::size_t j) const { return eigenvalues_[static_cast<Eigen::Index>(j - 1)]; }
  const OrthogonalBasis& basis() const { return basis_; }
  std::size_t spike_count() const { return spike_count_; }

  /// u_j, 1-based.
  Vector eigenvector(std::size_t j) const { return basis_.column(j); }
  Vector apply_sigma(const Vector& v) const;
  /// v^T Sigma v, evaluated in eigen-coordinates.
  double quadratic_form(const Vector& v) const;
  /// Only for small d; throws DimensionError above 4096.
  Matrix dense() const;

 private:
  Vector eigenvalues_;
  OrthogonalBasis basis_;
  std::size_t spike_count_;
};

struct ParameterVector {
  Vector theta;
  double delta = 0.0;
  double norm = 1.0;
};

/// Per-condition outcome of the finite-grid HDLSS check.
struct HdlssCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct HdlssReport {
  std::vector<HdlssCheck> checks;
  std::string note = "finite-grid check only";

  bool all_passed() const;
  const HdlssCheck* find(const std::string& name) const;
};

CovarianceModel realize(const SpikeSpec& spec, std::size_t n, const BasisSpec& basis = {});
CovarianceModel realize(const ModelFamily& family, std::size_t n, const BasisSpec& basis = {});
std::size_t dimension_at(const ModelFamily& family, std::size_t n);
std::size_t spike_count(const ModelFamily& family);

/// Eigenvalues (1+(d-1)a, 1-a, ..., 1-a); u_1 = d^{-1/2}(1,...,1) completed by one reflection.
CovarianceModel equicorrelated(std::size_t d, double a);

HdlssReport validate_hdlss(const SpikeSpec& spec, std::span<const std::size_t> n_grid);

/// Var(X^T theta) = theta^T Sigma theta.
double null_risk(const CovarianceModel& model, const ParameterVector& theta);
double null_risk(const CovarianceModel& model, const Vector& theta);

ParameterVector make_theta(const CovarianceModel& model, double delta, double norm,
                           std::span<const double> spike_weights, std::uint64_t bulk_seed);

/// sum_k lambda_k / lambda_1.
double effective_rank(const CovarianceModel& model);

/// sum_{j>m} ||P_j theta||^2 for m = 0..d (entry m), accumulated from the tail.
std::vector<double> tail_mass(const CovarianceModel& model, const Vector& theta);

}  // namespace mnls::model
