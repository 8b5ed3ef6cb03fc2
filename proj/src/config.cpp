#include "mnls/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace mnls::harness {

namespace {

const std::set<std::string, std::less<>> kSections{"model", "sweep", "sampling", "theta", "bounds", "output"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

// Typed access to the raw key/value map that records every problem instead of stopping.
class Reader {
 public:
  Reader(std::map<std::string, Entry, std::less<>> entries, std::vector<ConfigIssue>& issues)
      : entries_(std::move(entries)), issues_(issues) {}

  bool has(std::string_view key) const { return entries_.count(std::string(key)) != 0; }
  std::size_t line(std::string_view key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  std::optional<std::string_view> raw(std::string_view key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(std::string(key));
    return std::string_view(it->second.value);
  }

  void real(std::string_view key, double& out) {
    if (auto v = raw(key)) {
      if (auto d = to_double(*v)) out = *d;
      else fail(key, "expected a real number, got '" + std::string(*v) + "'");
    }
  }

  template <typename Int>
  void integer(std::string_view key, Int& out) {
    if (auto v = raw(key)) {
      const auto u = to_unsigned(*v);
      if (u && *u <= static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) out = static_cast<Int>(*u);
      else fail(key, "expected a non-negative integer, got '" + std::string(*v) + "'");
    }
  }

  void boolean(std::string_view key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true") out = true;
      else if (*v == "false") out = false;
      else fail(key, "expected true or false, got '" + std::string(*v) + "'");
    }
  }

  void text(std::string_view key, std::string& out) {
    if (auto v = raw(key)) out = std::string(*v);
  }

  void real_list(std::string_view key, std::vector<double>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (auto item : split_list(*v)) {
        if (auto d = to_double(item)) out.push_back(*d);
        else {
          fail(key, "list entry '" + std::string(item) + "' is not a real number");
          return;
        }
      }
    }
  }

  void size_list(std::string_view key, std::vector<std::size_t>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (auto item : split_list(*v)) {
        if (auto u = to_unsigned(item)) out.push_back(static_cast<std::size_t>(*u));
        else {
          fail(key, "list entry '" + std::string(item) + "' is not a non-negative integer");
          return;
        }
      }
    }
  }

  void fail(std::string_view key, std::string message) {
    issues_.push_back({line(key), std::string(key), std::move(message)});
  }

  void report_unused() {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) issues_.push_back({entry.line, key, "unknown key"});
    }
  }

  // Keys consumed only to flag that they do not apply in this configuration.
  void reject(std::string_view key, const std::string& why) {
    if (raw(key)) fail(key, why);
  }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
  std::set<std::string, std::less<>> used_;
  std::vector<ConfigIssue>& issues_;
};

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

std::string issue_summary(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid configuration:";
  for (const auto& i : issues) {
    out += "\n  ";
    if (i.line) out += "line " + std::to_string(i.line) + ": ";
    out += i.key + ": " + i.message;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(issue_summary(issues)), issues_(std::move(issues)) {}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<ConfigIssue> issues;
  std::map<std::string, Entry, std::less<>> entries;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      issues.push_back({line_no, std::string(line), "expected 'section.key = value'"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto dot = key.find('.');
    if (dot == std::string::npos || !kSections.count(key.substr(0, dot))) {
      issues.push_back({line_no, key, "unknown section (expected model, sweep, sampling, theta, bounds or output)"});
      continue;
    }
    if (entries.count(key)) {
      issues.push_back({line_no, key, "duplicate key"});
      continue;
    }
    entries.emplace(key, Entry{value, line_no});
  }

  Reader in(std::move(entries), issues);
  ExperimentConfig c;

  // model
  std::string kind = "equicorrelated";
  in.text("model.kind", kind);
  model::DimRule dim;
  in.real("model.dim_kappa", dim.kappa);
  in.real("model.dim_power", dim.power);
  const std::string spike_only = "applies only to model.kind = spike";
  const std::string equi_only = "applies only to model.kind = equicorrelated";
  if (kind == "equicorrelated") {
    model::EquicorrelatedRule rule;
    rule.dim = dim;
    in.real("model.a", rule.a);
    if (!(rule.a > 0.0 && rule.a < 1.0)) in.fail("model.a", "a must lie in (0, 1), got " + format_double(rule.a));
    for (auto key : {"model.spike_scale", "model.spike_d_power", "model.spike_n_power", "model.bulk_c1",
                     "model.bulk_c2"}) {
      in.reject(key, spike_only);
    }
    c.family = rule;
  } else if (kind == "spike") {
    model::SpikeSpec spec;
    spec.dim = dim;
    std::vector<double> scale;
    in.real_list("model.spike_scale", scale);
    if (!in.has("model.spike_scale")) in.fail("model.spike_scale", "required when model.kind = spike");
    std::vector<double> d_power(scale.size(), 1.0);
    std::vector<double> n_power(scale.size(), 0.0);
    in.real_list("model.spike_d_power", d_power);
    in.real_list("model.spike_n_power", n_power);
    if (d_power.size() != scale.size() || n_power.size() != scale.size()) {
      in.fail("model.spike_scale", "spike_scale, spike_d_power and spike_n_power must have equal length");
    } else {
      for (std::size_t j = 0; j < scale.size(); ++j) spec.spike_rules.push_back({scale[j], d_power[j], n_power[j]});
    }
    in.real("model.bulk_c1", spec.bulk.c1);
    in.real("model.bulk_c2", spec.bulk.c2);
    in.reject("model.a", equi_only);
    try {
      spec.validate();
    } catch (const std::exception& e) {
      in.fail("model.spike_scale", e.what());
    }
    c.family = spec;
  } else {
    in.fail("model.kind", "expected spike or equicorrelated, got '" + kind + "'");
  }
  if (!(dim.kappa > 0.0)) in.fail("model.dim_kappa", "must be > 0");
  if (!(dim.power > 1.0)) in.fail("model.dim_power", "must be > 1");

  std::string basis = "identity";
  in.text("model.basis", basis);
  if (basis == "identity") c.basis.kind = model::BasisSpec::Kind::Identity;
  else if (basis == "householder") c.basis.kind = model::BasisSpec::Kind::Householder;
  else in.fail("model.basis", "expected identity or householder, got '" + basis + "'");
  in.integer("model.basis_seed", c.basis.seed);
  in.integer("model.basis_reflections", c.basis.reflections);

  // sweep
  in.size_list("sweep.n_grid", c.n_grid);
  if (!in.has("sweep.n_grid")) in.fail("sweep.n_grid", "required");
  else if (c.n_grid.empty()) in.fail("sweep.n_grid", "must not be empty");
  for (std::size_t i = 1; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] <= c.n_grid[i - 1]) {
      in.fail("sweep.n_grid", "n_grid not increasing");
      break;
    }
  }
  if (!c.n_grid.empty() && c.n_grid.front() < 2) in.fail("sweep.n_grid", "every n must be >= 2");
  in.integer("sweep.replicates", c.replicates);
  if (c.replicates < 1) in.fail("sweep.replicates", "must be >= 1");
  in.integer("sweep.base_seed", c.base_seed);

  // sampling
  std::string law = "gaussian";
  std::string noise_law = "gaussian";
  int df = 5;
  in.text("sampling.law", law);
  in.text("sampling.noise_law", noise_law);
  in.integer("sampling.student_df", df);
  try {
    c.law = sampler::EntryLaw::parse(law, df);
  } catch (const std::exception& e) {
    in.fail(in.has("sampling.student_df") && law == "student_t" ? "sampling.student_df" : "sampling.law", e.what());
  }
  try {
    c.noise_law = sampler::EntryLaw::parse(noise_law, df);
  } catch (const std::exception& e) {
    in.fail("sampling.noise_law", e.what());
  }
  in.real("sampling.sigma", c.sigma);
  if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) in.fail("sampling.sigma", "must be finite and >= 0");

  // theta
  in.real("theta.delta", c.theta.delta);
  in.real("theta.norm", c.theta.norm);
  in.real_list("theta.spike_weights", c.theta.spike_weights);
  in.integer("theta.bulk_seed", c.theta.bulk_seed);
  if (!(c.theta.delta >= 0.0 && c.theta.delta < 1.0)) in.fail("theta.delta", "must lie in [0, 1)");
  if (!(c.theta.norm > 0.0)) in.fail("theta.norm", "must be > 0");
  if (!c.theta.spike_weights.empty() && c.theta.spike_weights.size() != model::spike_count(c.family)) {
    in.fail("theta.spike_weights", "needs one weight per spike (" + std::to_string(model::spike_count(c.family)) + ")");
  }

  // bounds
  in.real("bounds.t", c.bounds.high_probability.t);
  in.real("bounds.C", c.bounds.high_probability.C);
  in.integer("bounds.m_cap", c.bounds.m_cap);
  in.integer("bounds.thm2_m_cap", c.bounds.high_probability.m_cap);
  in.real("bounds.minimax_c", c.bounds.minimax_c);
  in.boolean("bounds.diagnostics", c.diagnostics);
  in.real("bounds.opnorm_tol", c.opnorm_tol);
  in.integer("bounds.opnorm_max_iter", c.opnorm_max_iter);
  if (!(c.bounds.high_probability.t > 0.0)) in.fail("bounds.t", "must be > 0");
  if (!(c.bounds.high_probability.C > 0.0)) in.fail("bounds.C", "must be > 0");
  if (!(c.bounds.minimax_c > 0.0)) in.fail("bounds.minimax_c", "must be > 0");
  if (!(c.opnorm_tol > 0.0)) in.fail("bounds.opnorm_tol", "must be > 0");
  if (c.opnorm_max_iter < 1) in.fail("bounds.opnorm_max_iter", "must be >= 1");

  // output
  in.text("output.path", c.output_path);
  in.boolean("output.record_timing", c.record_timing);
  if (c.output_path.empty()) in.fail("output.path", "must not be empty");

  in.report_unused();

  // Realizability over the grid; only meaningful once the parts above are sound.
  if (issues.empty()) {
    for (std::size_t n : c.n_grid) {
      try {
        const std::size_t d = model::dimension_at(c.family, n);
        if (d < n) {
          in.fail("sweep.n_grid", "n = " + std::to_string(n) + " exceeds d(n) = " + std::to_string(d));
          continue;
        }
        (void)model::realize(c.family, n);
      } catch (const std::exception& e) {
        in.fail("sweep.n_grid", "n = " + std::to_string(n) + ": " + e.what());
      }
    }
  }

  if (!issues.empty()) {
    std::stable_sort(issues.begin(), issues.end(),
                     [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
    throw ConfigError(std::move(issues));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  auto put = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
  auto put_bool = [&](const char* key, bool v) { put(key, v ? "true" : "false"); };

  if (const auto* equi = std::get_if<model::EquicorrelatedRule>(&c.family)) {
    put("model.kind", "equicorrelated");
    put("model.a", format_double(equi->a));
    put("model.dim_kappa", format_double(equi->dim.kappa));
    put("model.dim_power", format_double(equi->dim.power));
  } else {
    const auto& spec = std::get<model::SpikeSpec>(c.family);
    std::vector<double> scale;
    std::vector<double> d_power;
    std::vector<double> n_power;
    for (const auto& r : spec.spike_rules) {
      scale.push_back(r.scale);
      d_power.push_back(r.d_exponent);
      n_power.push_back(r.n_exponent);
    }
    put("model.kind", "spike");
    put("model.spike_scale", join(scale));
    put("model.spike_d_power", join(d_power));
    put("model.spike_n_power", join(n_power));
    put("model.bulk_c1", format_double(spec.bulk.c1));
    put("model.bulk_c2", format_double(spec.bulk.c2));
    put("model.dim_kappa", format_double(spec.dim.kappa));
    put("model.dim_power", format_double(spec.dim.power));
  }
  put("model.basis", c.basis.kind == model::BasisSpec::Kind::Identity ? "identity" : "householder");
  put("model.basis_seed", std::to_string(c.basis.seed));
  put("model.basis_reflections", std::to_string(c.basis.reflections));

  put("sweep.n_grid", join(c.n_grid));
  put("sweep.replicates", std::to_string(c.replicates));
  put("sweep.base_seed", std::to_string(c.base_seed));

  put("sampling.law", c.law.name());
  put("sampling.noise_law", c.noise_law.name());
  const int df = c.law.kind == sampler::LawKind::StudentT ? c.law.df : c.noise_law.df;
  put("sampling.student_df", std::to_string(df));
  put("sampling.sigma", format_double(c.sigma));

  put("theta.delta", format_double(c.theta.delta));
  put("theta.norm", format_double(c.theta.norm));
  put("theta.spike_weights", join(c.theta.spike_weights));
  put("theta.bulk_seed", std::to_string(c.theta.bulk_seed));

  put("bounds.t", format_double(c.bounds.high_probability.t));
  put("bounds.C", format_double(c.bounds.high_probability.C));
  put("bounds.m_cap", std::to_string(c.bounds.m_cap));
  put("bounds.thm2_m_cap", std::to_string(c.bounds.high_probability.m_cap));
  put("bounds.minimax_c", format_double(c.bounds.minimax_c));
  put_bool("bounds.diagnostics", c.diagnostics);
  put("bounds.opnorm_tol", format_double(c.opnorm_tol));
  put("bounds.opnorm_max_iter", std::to_string(c.opnorm_max_iter));

  put("output.path", c.output_path);
  put_bool("output.record_timing", c.record_timing);
  return out.str();
}

}  // namespace mnls::harness
