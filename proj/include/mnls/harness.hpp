#pragma once

// Sweeps over n, one row per (n, replicate), CSV + JSON persistence and summaries.

#include "mnls/bounds.hpp"
#include "mnls/config.hpp"
#include "mnls/diagnostics.hpp"
#include "mnls/risk.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mnls::harness {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct ResultRow {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double bias_sq = kNaN;
  double variance = kNaN;
  double risk = kNaN;
  double null_risk = kNaN;
  double normalized_risk = kNaN;
  double eig_ratio_max = kNaN;
  double smallest_ratio = kNaN;
  std::vector<double> proj_dist;  // j = 1..m_bar, NaN when diagnostics are off
  double opnorm_diff = kNaN;
  double lemma1_bound = kNaN;
  double lemma4_bound = kNaN;
  double thm2_bias_bound = kNaN;
  double thm2_var_bound = kNaN;
  std::size_t thm2_bias_argmin_m = 0;
  double blt_bound = kNaN;
  double rho_n = kNaN;
  double minimax_proxy = kNaN;
  double elapsed_ms = kNaN;
  std::string error;  // empty on success
};

/// base_seed + replicate + mix64(n): adding grid points leaves other rows untouched.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t n, std::size_t replicate);

/// Column names in output order; m_bar proj_dist columns.
std::vector<std::string> result_columns(std::size_t m_bar);

/// One instance of the sweep. Never throws for computation failures: they land in row.error.
ResultRow compute_row(const ExperimentConfig& config, const model::CovarianceModel& model,
                      const model::ParameterVector& theta, std::size_t n, std::size_t replicate);

/// All rows, ordered by (n, replicate), computed on `threads` workers (0 = all cores).
std::vector<ResultRow> compute_rows(const ExperimentConfig& config, unsigned threads = 0);

/// Text of the CSV file for these rows.
std::string format_csv(const std::vector<ResultRow>& rows, std::size_t m_bar);

/// Writes bytes to path through a sibling temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

struct SweepOutcome {
  std::filesystem::path csv;
  std::filesystem::path sidecar;
  std::size_t rows = 0;
  std::size_t error_rows = 0;
  double wall_seconds = 0.0;
};

/// Runs the sweep and writes the CSV (to out, or config.output_path) plus a JSON sidecar at <csv>.json.
SweepOutcome run_sweep(const ExperimentConfig& config, unsigned threads = 0, const std::filesystem::path& out = {});

/// Parsed CSV: header plus string cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws std::out_of_range naming the column
};

Table read_csv(const std::filesystem::path& path);
Table parse_csv(const std::string& text);

struct ColumnSummary {
  std::size_t n = 0;
  std::size_t count = 0;  // finite-or-inf values used
  double median = kNaN;
  double q05 = kNaN;
  double q95 = kNaN;
};

struct DominanceTally {
  std::string bound;
  std::string quantity;
  std::size_t rows = 0;
  std::size_t dominated = 0;
  double fraction() const { return rows == 0 ? 0.0 : static_cast<double>(dominated) / static_cast<double>(rows); }
};

struct Report {
  std::map<std::string, std::vector<ColumnSummary>> columns;  // per n, ascending
  std::vector<DominanceTally> tallies;
  std::size_t data_rows = 0;
  std::size_t error_rows = 0;
  std::string text;

  bool all_dominated() const;
};

/// Summaries of a results table; throws std::runtime_error on a schema mismatch or no rows.
Report summarize_table(const Table& table);
/// Reads a results file, summarizes it and, if plot_dir is non-empty, writes <plot_dir>/<column>.csv
/// with columns n, median, q05, q95.
Report report(const std::filesystem::path& csv, const std::filesystem::path& plot_dir = {});

}  // namespace mnls::harness
