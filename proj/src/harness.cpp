#include "mnls/harness.hpp"

#include "mnls/parallel.hpp"
#include "mnls/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unistd.h>

namespace mnls::harness {

namespace {

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = c == ',' ? ';' : ' ';
  }
  return s.empty() ? "unknown error" : s;
}

double parse_cell(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = kNaN;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return kNaN;
  return v;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t n, std::size_t replicate) {
  return base_seed + static_cast<std::uint64_t>(replicate) + mix64(static_cast<std::uint64_t>(n));
}

std::vector<std::string> result_columns(std::size_t m_bar) {
  std::vector<std::string> cols{"n",          "d",        "replicate",       "seed",          "bias_sq",
                                "variance",   "risk",     "null_risk",       "normalized_risk", "eig_ratio_max",
                                "smallest_ratio"};
  for (std::size_t j = 1; j <= m_bar; ++j) cols.push_back("proj_dist_" + std::to_string(j));
  for (const char* c : {"opnorm_diff", "lemma1_bound", "lemma4_bound", "thm2_bias_bound", "thm2_var_bound",
                        "thm2_bias_argmin_m", "blt_bound", "rho_n", "minimax_proxy", "elapsed_ms", "error"}) {
    cols.emplace_back(c);
  }
  return cols;
}

ResultRow compute_row(const ExperimentConfig& config, const model::CovarianceModel& cov,
                      const model::ParameterVector& theta, std::size_t n, std::size_t replicate) {
  const auto start = std::chrono::steady_clock::now();
  ResultRow row;
  row.n = n;
  row.d = cov.dimension();
  row.replicate = replicate;
  row.seed = replicate_seed(config.base_seed, n, replicate);
  const std::size_t m_bar = model::spike_count(config.family);
  row.proj_dist.assign(m_bar, kNaN);
  try {
    auto x = std::make_shared<const DesignMatrix>(sampler::sample_design(cov, n, config.law, row.seed));
    const auto dd = estimator::dual_decompose(x);
    const auto r = risk::conditional_risk(cov, dd, theta, config.sigma, row.seed);
    row.bias_sq = r.bias_sq;
    row.variance = r.variance;
    row.risk = r.total;
    row.null_risk = r.null_risk;
    row.normalized_risk = r.normalized;

    row.opnorm_diff = diagnostics::op_norm_diff(*x, cov, config.opnorm_tol, config.opnorm_max_iter);
    const auto b = bounds::evaluate_bounds(cov, dd, theta.theta, config.sigma, row.opnorm_diff, config.bounds);
    row.lemma1_bound = b.lemma1_bias;
    row.lemma4_bound = b.lemma4_variance;
    row.thm2_bias_bound = b.thm2_bias.value;
    row.thm2_var_bound = b.thm2_variance.value;
    row.thm2_bias_argmin_m = b.thm2_bias.argmin_m;
    row.blt_bound = b.blt_bias;
    row.rho_n = b.rho_n;
    row.minimax_proxy = b.minimax_proxy;

    if (config.diagnostics) {
      const auto diag = diagnostics::run_diagnostics(dd, cov, row.opnorm_diff, config.bounds.high_probability.t);
      row.eig_ratio_max = diag.eig.ratios.empty() ? kNaN : diag.eig.max;
      row.smallest_ratio = diag.smallest.ratio;
      for (std::size_t j = 0; j < diag.projector_dists.size() && j < m_bar; ++j) row.proj_dist[j] = diag.projector_dists[j];
    }
  } catch (const std::exception& e) {
    ResultRow failed;
    failed.n = row.n;
    failed.d = row.d;
    failed.replicate = row.replicate;
    failed.seed = row.seed;
    failed.proj_dist.assign(m_bar, kNaN);
    failed.error = sanitize(e.what());
    row = std::move(failed);
  }
  if (config.record_timing) {
    row.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

std::vector<ResultRow> compute_rows(const ExperimentConfig& config, unsigned threads) {
  struct Point {
    std::shared_ptr<const model::CovarianceModel> model;
    model::ParameterVector theta;
    std::string error;
  };
  std::vector<Point> points(config.n_grid.size());
  for (std::size_t k = 0; k < config.n_grid.size(); ++k) {
    try {
      auto cov = std::make_shared<const model::CovarianceModel>(model::realize(config.family, config.n_grid[k], config.basis));
      points[k].theta = risk::theta_from_policy(*cov, config.theta);
      points[k].model = std::move(cov);
    } catch (const std::exception& e) {
      points[k].error = sanitize(e.what());
    }
  }

  const std::size_t reps = config.replicates;
  std::vector<ResultRow> rows(config.n_grid.size() * reps);
  // Largest n first so the long tasks start early; results land in their own slots.
  const std::size_t total = rows.size();
  parallel_for(total, threads, [&](std::size_t task) {
    const std::size_t slot = total - 1 - task;
    const std::size_t k = slot / reps;
    const std::size_t r = slot % reps;
    const std::size_t n = config.n_grid[k];
    if (!points[k].model) {
      ResultRow failed;
      failed.n = n;
      failed.d = model::dimension_at(config.family, n);
      failed.replicate = r;
      failed.seed = replicate_seed(config.base_seed, n, r);
      failed.proj_dist.assign(model::spike_count(config.family), kNaN);
      failed.error = points[k].error;
      rows[slot] = std::move(failed);
      return;
    }
    rows[slot] = compute_row(config, *points[k].model, points[k].theta, n, r);
  });
  return rows;
}

std::string format_csv(const std::vector<ResultRow>& rows, std::size_t m_bar) {
  std::string out;
  const auto cols = result_columns(m_bar);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::to_string(r.n),      std::to_string(r.d),        std::to_string(r.replicate),
                                   std::to_string(r.seed),   cell(r.bias_sq),            cell(r.variance),
                                   cell(r.risk),             cell(r.null_risk),          cell(r.normalized_risk),
                                   cell(r.eig_ratio_max),    cell(r.smallest_ratio)};
    for (std::size_t j = 0; j < m_bar; ++j) cells.push_back(cell(j < r.proj_dist.size() ? r.proj_dist[j] : kNaN));
    for (double v : {r.opnorm_diff, r.lemma1_bound, r.lemma4_bound, r.thm2_bias_bound, r.thm2_var_bound}) {
      cells.push_back(cell(v));
    }
    cells.push_back(std::to_string(r.thm2_bias_argmin_m));
    for (double v : {r.blt_bound, r.rho_n, r.minimax_proxy, r.elapsed_ms}) cells.push_back(cell(v));
    cells.push_back(r.error);
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

SweepOutcome run_sweep(const ExperimentConfig& config, unsigned threads, const std::filesystem::path& out) {
  const auto started = std::chrono::steady_clock::now();
  const std::string timestamp = utc_timestamp();
  const auto rows = compute_rows(config, threads);
  const std::size_t m_bar = model::spike_count(config.family);

  SweepOutcome outcome;
  outcome.csv = out.empty() ? std::filesystem::path(config.output_path) : out;
  outcome.sidecar = outcome.csv;
  outcome.sidecar += ".json";
  outcome.rows = rows.size();
  outcome.error_rows = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); }));
  write_atomic(outcome.csv, format_csv(rows, m_bar));
  outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const std::string text = serialize_config(config);
  nlohmann::json meta{
      {"config", text},
      {"config_hash", hex64(fnv1a(text))},
      {"version", kArtifactVersion},
      {"started_utc", timestamp},
      {"wall_clock_seconds", outcome.wall_seconds},
      {"threads", resolve_threads(threads)},
      {"rows", outcome.rows},
      {"error_rows", outcome.error_rows},
  };
  if (config.record_timing) {
    std::vector<double> ms;
    for (const auto& r : rows) ms.push_back(r.elapsed_ms);
    meta["elapsed_ms"] = ms;
  }
  write_atomic(outcome.sidecar, meta.dump(2) + "\n");
  return outcome;
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        throw std::runtime_error("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                                 " fields, header has " + std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open results file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

bool Report::all_dominated() const {
  for (const auto& t : tallies) {
    if (t.bound.rfind("lemma", 0) == 0 && t.dominated != t.rows) return false;
  }
  return true;
}

Report summarize_table(const Table& table) {
  for (const auto& name : result_columns(0)) {
    if (std::find(table.header.begin(), table.header.end(), name) == table.header.end()) {
      throw std::runtime_error("schema mismatch: missing column '" + name + "'");
    }
  }
  if (table.rows.empty()) throw std::runtime_error("no rows");

  Report rep;
  const std::size_t n_col = table.column("n");
  const std::size_t err_col = table.column("error");
  std::vector<const std::vector<std::string>*> good;
  for (const auto& row : table.rows) {
    if (row[err_col].empty()) good.push_back(&row);
    else ++rep.error_rows;
  }
  rep.data_rows = table.rows.size();

  std::set<std::size_t> ns;
  for (const auto* row : good) ns.insert(static_cast<std::size_t>(parse_cell((*row)[n_col])));

  const std::set<std::string> skip{"n", "replicate", "seed", "error"};
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (skip.count(name)) continue;
    auto& summaries = rep.columns[name];
    for (std::size_t n : ns) {
      std::vector<double> values;
      for (const auto* row : good) {
        if (static_cast<std::size_t>(parse_cell((*row)[n_col])) != n) continue;
        const double v = parse_cell((*row)[c]);
        if (!std::isnan(v)) values.push_back(v);
      }
      ColumnSummary s;
      s.n = n;
      s.count = values.size();
      if (!values.empty()) {
        s.median = risk::nearest_rank_quantile(values, 0.5);
        s.q05 = risk::nearest_rank_quantile(values, 0.05);
        s.q95 = risk::nearest_rank_quantile(values, 0.95);
      }
      summaries.push_back(s);
    }
  }

  auto tally = [&](const std::string& upper, const std::string& lower) {
    DominanceTally t{upper, lower, 0, 0};
    const std::size_t u = table.column(upper);
    const std::size_t l = table.column(lower);
    for (const auto* row : good) {
      const double hi = parse_cell((*row)[u]);
      const double lo = parse_cell((*row)[l]);
      if (std::isnan(hi) || std::isnan(lo)) continue;
      ++t.rows;
      if (lo <= hi) ++t.dominated;
    }
    return t;
  };
  rep.tallies.push_back(tally("lemma1_bound", "bias_sq"));
  rep.tallies.push_back(tally("lemma4_bound", "variance"));
  rep.tallies.push_back(tally("blt_bound", "lemma1_bound"));

  std::ostringstream text;
  text << "rows: " << rep.data_rows << " (errors: " << rep.error_rows << ")\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %8s %8s %14s %14s %14s\n", "column", "n", "count", "median", "q05", "q95");
  text << buf;
  for (const auto& [name, summaries] : rep.columns) {
    for (const auto& s : summaries) {
      std::snprintf(buf, sizeof buf, "%-20s %8zu %8zu %14.6g %14.6g %14.6g\n", name.c_str(), s.n, s.count, s.median,
                    s.q05, s.q95);
      text << buf;
    }
  }
  for (const auto& t : rep.tallies) {
    const bool required = t.bound.rfind("lemma", 0) == 0;
    std::snprintf(buf, sizeof buf, "%s %s >= %s: %.4f (%zu/%zu)\n", required ? "dominance" : "comparison",
                  t.bound.c_str(), t.quantity.c_str(), t.fraction(), t.dominated, t.rows);
    text << buf;
  }
  rep.text = text.str();
  return rep;
}

Report report(const std::filesystem::path& csv, const std::filesystem::path& plot_dir) {
  Report rep = summarize_table(read_csv(csv));
  if (!plot_dir.empty()) {
    std::filesystem::create_directories(plot_dir);
    for (const auto& [name, summaries] : rep.columns) {
      std::string body = "n,median,q05,q95\n";
      for (const auto& s : summaries) {
        body += std::to_string(s.n) + "," + cell(s.median) + "," + cell(s.q05) + "," + cell(s.q95) + "\n";
      }
      write_atomic(plot_dir / (name + ".csv"), body);
    }
  }
  return rep;
}

}  // namespace mnls::harness
