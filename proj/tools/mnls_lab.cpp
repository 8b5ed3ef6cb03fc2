#include "mnls/bounds.hpp"
#include "mnls/config.hpp"
#include "mnls/diagnostics.hpp"
#include "mnls/harness.hpp"
#include "mnls/risk.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

using namespace mnls;
using harness::format_double;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAssert = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

harness::ExperimentConfig load(const Common& c) {
  auto config = harness::load_config(c.config_path);
  if (c.seed) config.base_seed = *c.seed;
  return config;
}

void line(const std::string& key, double v) { std::cout << key << " = " << format_double(v) << '\n'; }
void line(const std::string& key, std::size_t v) { std::cout << key << " = " << v << '\n'; }

struct Instance {
  std::shared_ptr<const model::CovarianceModel> model;
  model::ParameterVector theta;
  std::shared_ptr<const DesignMatrix> x;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

Instance draw_instance(const harness::ExperimentConfig& config, std::size_t n, std::size_t replicate) {
  Instance in;
  in.n = n == 0 ? config.n_grid.front() : n;
  in.model = std::make_shared<const model::CovarianceModel>(model::realize(config.family, in.n, config.basis));
  in.theta = risk::theta_from_policy(*in.model, config.theta);
  in.seed = harness::replicate_seed(config.base_seed, in.n, replicate);
  in.x = std::make_shared<const DesignMatrix>(sampler::sample_design(*in.model, in.n, config.law, in.seed));
  return in;
}

int simulate(const Common& common, std::size_t n, std::size_t replicate) {
  const auto config = load(common);
  const auto in = draw_instance(config, n, replicate);
  const auto dd = estimator::dual_decompose(in.x);
  const auto r = risk::conditional_risk(*in.model, dd, in.theta, config.sigma, in.seed);
  const double op = diagnostics::op_norm_diff(*in.x, *in.model, config.opnorm_tol, config.opnorm_max_iter);
  const auto b = bounds::evaluate_bounds(*in.model, dd, in.theta.theta, config.sigma, op, config.bounds);

  line("instance.n", in.n);
  line("instance.d", in.model->dimension());
  std::cout << "instance.seed = " << in.seed << '\n';
  line("risk.bias_sq", r.bias_sq);
  line("risk.variance", r.variance);
  line("risk.total", r.total);
  line("risk.null_risk", r.null_risk);
  line("risk.normalized", r.normalized);
  line("bounds.lemma1_bias", b.lemma1_bias);
  line("bounds.lemma1_m", b.lemma1_m);
  line("bounds.lemma4_variance", b.lemma4_variance);
  line("bounds.lemma4_m", b.lemma4_m);
  line("bounds.thm2_bias", b.thm2_bias.value);
  line("bounds.thm2_bias_m", b.thm2_bias.argmin_m);
  line("bounds.thm2_variance", b.thm2_variance.value);
  line("bounds.thm2_variance_m_outer", b.thm2_variance.argmin_outer);
  line("bounds.thm2_variance_m", b.thm2_variance.argmin_m);
  line("bounds.thm1_bias_rate", b.thm1.bias);
  line("bounds.thm1_variance_rate_spike", b.thm1.variance_spike);
  line("bounds.thm1_variance_rate_bulk", b.thm1.variance_bulk);
  line("bounds.blt_bias", b.blt_bias);
  line("bounds.minimax_proxy", b.minimax_proxy);
  line("bounds.rho_n", b.rho_n);
  for (std::size_t j = 0; j < b.kl_projector.size(); ++j) line("bounds.kl_projector_" + std::to_string(j + 1), b.kl_projector[j]);
  line("bounds.C", b.C);
  line("bounds.t", b.t);
  std::cout << "# thm2 values use the supplied C and are shape-only\n";
  return 0;
}

int diagnose(const Common& common, std::size_t n, std::size_t replicate) {
  const auto config = load(common);
  const auto in = draw_instance(config, n, replicate);
  const auto& cov = *in.model;
  const auto dd = estimator::dual_decompose(in.x);
  const double op = diagnostics::op_norm_diff(*in.x, cov, config.opnorm_tol, config.opnorm_max_iter);
  const auto diag = diagnostics::run_diagnostics(dd, cov, op, config.bounds.high_probability.t);
  const std::size_t m_bar = diag.projector_dists.size();

  line("instance.n", in.n);
  line("instance.d", cov.dimension());
  std::cout << "instance.seed = " << in.seed << '\n';
  for (std::size_t k = 0; k < diag.eig.ratios.size(); ++k) line("eig_ratio_" + std::to_string(k + 1), diag.eig.ratios[k]);
  line("eig_ratio.spike_term", diag.eig.spike_term);
  line("eig_ratio.sampling_term", diag.eig.sampling_term);
  line("smallest_ratio", diag.smallest.ratio);
  std::cout << "smallest_ratio.rank_deficient = " << (diag.smallest.rank_deficient ? "true" : "false") << '\n';
  line("opnorm_diff", op);
  if (m_bar >= 1) {
    const auto z = sampler::sample_z(in.n, cov.dimension(), config.law, in.seed);
    line("opnorm_chain_bound", diagnostics::opnorm_chain_bound(z, cov, m_bar));
  }
  for (std::size_t j = 1; j <= m_bar; ++j) {
    line("proj_dist_" + std::to_string(j), diag.projector_dists[j - 1]);
    line("kl_bound_" + std::to_string(j), bounds::kl_projector_bound(cov.eigenvalue_span(), op, j));
  }
  const auto split = diagnostics::dual_split(*in.x, cov, sampler::DesignProvenance{config.law, in.seed}, m_bar);
  line("dual_split.max_ratio", split.max_ratio);
  line("dual_split.min_ratio", split.min_ratio);
  line("dual_split.weyl_violation", split.weyl_violation);
  return 0;
}

int baiyin(std::size_t n, std::size_t p, const std::string& law_name, int df, std::uint64_t seed, std::size_t reps,
           unsigned threads) {
  const auto law = sampler::EntryLaw::parse(law_name, df);
  const auto r = diagnostics::bai_yin_check(n, p, law, seed, reps, threads);
  line("n", r.n);
  line("p", r.p);
  line("mean_sigma_max", r.mean_max);
  line("target_sigma_max", r.target_max);
  line("mean_sigma_min", r.mean_min);
  line("target_sigma_min", r.target_min);
  line("deviation_max", r.deviation_max);
  line("deviation_min", r.deviation_min);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-norm interpolation experiments in spiked covariance models"};
  app.require_subcommand(1);

  Common common;
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::string out;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub, bool with_threads) {
    sub->add_option("--config", common.config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { common.seed = s; },
                                            "Override sweep.base_seed");
    if (with_threads) sub->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  };

  auto* sim = app.add_subcommand("simulate", "Risk and bounds for one instance");
  add_common(sim, false);
  sim->add_option("--n", n, "Sample size (default: first grid point)");
  sim->add_option("--replicate", replicate, "Replicate index");

  auto* sweep = app.add_subcommand("sweep", "Run the configured sweep");
  add_common(sweep, true);
  sweep->add_option("--out", out, "Output CSV (default: output.path)");

  auto* diag = app.add_subcommand("diagnose", "Spectral diagnostics for one instance");
  add_common(diag, false);
  diag->add_option("--n", n, "Sample size (default: first grid point)");
  diag->add_option("--replicate", replicate, "Replicate index");

  std::size_t by_n = 2000;
  std::size_t by_p = 500;
  std::size_t by_reps = 20;
  std::string by_law = "gaussian";
  int by_df = 5;
  auto* by = app.add_subcommand("baiyin", "Extreme singular values of W / sqrt(n)");
  by->add_option("--n", by_n, "Rows");
  by->add_option("--p", by_p, "Columns");
  by->add_option("--reps", by_reps, "Draws");
  by->add_option("--law", by_law, "gaussian, rademacher, uniform or student_t");
  by->add_option("--df", by_df, "Degrees of freedom for student_t");
  by->add_option("--seed", seed_value, "Stream seed");
  by->add_option("--threads", common.threads, "Worker threads (0 = all cores)");

  std::string results;
  std::string plots;
  bool assert_dominance = false;
  auto* rep = app.add_subcommand("report", "Summaries of a results CSV");
  rep->add_option("results", results, "Results CSV")->required()->check(CLI::ExistingFile);
  rep->add_option("--plots", plots, "Directory for per-column plot data");
  rep->add_flag("--assert", assert_dominance, "Exit 3 unless every dominance tally is 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return simulate(common, n, replicate);
    if (*diag) return diagnose(common, n, replicate);
    if (*by) return baiyin(by_n, by_p, by_law, by_df, seed_value, by_reps, common.threads);
    if (*sweep) {
      const auto config = load(common);
      const auto outcome = harness::run_sweep(config, common.threads, out);
      std::cout << "wrote " << outcome.csv.string() << " (" << outcome.rows << " rows, " << outcome.error_rows
                << " errors, " << format_double(outcome.wall_seconds) << " s)\n";
      return 0;
    }
    if (*rep) {
      const auto summary = harness::report(results, plots);
      std::cout << summary.text;
      if (assert_dominance && !summary.all_dominated()) {
        std::cerr << "dominance check failed\n";
        return kExitAssert;
      }
      return 0;
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
