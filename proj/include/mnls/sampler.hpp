#pragma once

// Designs X with rows X_i = U Lambda^{1/2} Z_i and labels Y = X theta + sigma xi. Every
// entry of Z and xi is drawn from a counter-based stream keyed by (seed, row, column, role),
// so any block can be regenerated in isolation and in any order.

#include "mnls/common.hpp"
#include "mnls/model.hpp"
#include "mnls/rng.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace mnls::sampler {

enum class LawKind { Gaussian, Rademacher, UniformScaled, StudentT };

/// Standardized entry law: mean 0, variance 1.
struct EntryLaw {
  LawKind kind = LawKind::Gaussian;
  int df = 5;  // StudentT only; must be >= 5

  static EntryLaw gaussian() { return {LawKind::Gaussian, 5}; }
  static EntryLaw rademacher() { return {LawKind::Rademacher, 5}; }
  static EntryLaw uniform() { return {LawKind::UniformScaled, 5}; }
  static EntryLaw student_t(int df);
  /// "gaussian", "rademacher", "uniform", "student_t" (df supplied separately).
  static EntryLaw parse(std::string_view name, int df = 5);

  std::string name() const;
  bool sub_gaussian() const { return kind != LawKind::StudentT; }

  double sample(std::uint64_t seed, std::uint64_t row, std::uint32_t col, StreamRole role) const;
  /// out[k] = sample(seed, row, k, role) for k = 0..out.size()-1.
  void fill_row(std::uint64_t seed, std::uint64_t row, StreamRole role, std::span<double> out) const;

  bool operator==(const EntryLaw&) const = default;
};

/// Where a design came from, when it was sampled here; lets diagnostics regenerate Z.
struct DesignProvenance {
  EntryLaw law;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::shared_ptr<const DesignMatrix> X;
  Vector Y;
  model::ParameterVector theta;
  double sigma = 0.0;
  std::shared_ptr<const model::CovarianceModel> model;
  EntryLaw noise_law;
  std::uint64_t seed = 0;
  /// Empty for externally supplied designs.
  std::optional<DesignProvenance> provenance;

  std::size_t samples() const { return static_cast<std::size_t>(X->rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(X->cols()); }
};

DesignMatrix sample_design(const model::CovarianceModel& model, std::size_t n, const EntryLaw& law,
                           std::uint64_t seed);

/// The standardized entries Z (n x d) behind `sample_design` for the same arguments.
DesignMatrix sample_z(std::size_t n, std::size_t d, const EntryLaw& law, std::uint64_t seed);

Vector sample_labels(const DesignMatrix& X, const Vector& theta, double sigma, const EntryLaw& law,
                     std::uint64_t seed);

/// Draws X and Y in one go. Noise uses `noise_law` keyed by the same seed.
Dataset make_dataset(std::shared_ptr<const model::CovarianceModel> model, std::size_t n,
                     model::ParameterVector theta, double sigma, const EntryLaw& design_law,
                     const EntryLaw& noise_law, std::uint64_t seed);

/// Binary dump: 32-byte header (magic "HDLS", u32 version, u64 n, u64 d, 8 reserved zero bytes)
/// followed by n*d little-endian binary64 values in row-major order.
void write_design(const std::filesystem::path& path, const DesignMatrix& X);
DesignMatrix read_design(const std::filesystem::path& path);
/// Sidecar in the `section.key = value` config grammar.
void write_design_metadata(const std::filesystem::path& path, const Dataset& data);

inline constexpr std::uint32_t kDesignFormatVersion = 1;

}  // namespace mnls::sampler
