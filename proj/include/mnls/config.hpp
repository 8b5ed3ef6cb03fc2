#pragma once

// Experiment configuration in a line-oriented `section.key = value` grammar.
// Sections: model, sweep, sampling, theta, bounds, output. Lists are comma-separated,
// booleans are true/false, '#' starts a comment.

#include "mnls/bounds.hpp"
#include "mnls/model.hpp"
#include "mnls/risk.hpp"
#include "mnls/sampler.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mnls::harness {

struct ConfigIssue {
  std::size_t line = 0;  // 0 when the issue is not tied to a line
  std::string key;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct ExperimentConfig {
  model::ModelFamily family = model::EquicorrelatedRule{};
  model::BasisSpec basis;
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 1;
  std::uint64_t base_seed = 0;
  sampler::EntryLaw law;
  sampler::EntryLaw noise_law;
  double sigma = 1.0;
  risk::ThetaPolicy theta;
  bounds::BoundSettings bounds;
  bool diagnostics = false;
  double opnorm_tol = 1e-6;
  int opnorm_max_iter = 1000;
  std::string output_path = "results.csv";
  bool record_timing = false;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError listing every problem found. Only sweep.n_grid is mandatory.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text: every key, fixed order, shortest round-trip floats.
std::string serialize_config(const ExperimentConfig& config);

/// Shortest decimal that parses back to the same binary64.
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace mnls::harness
