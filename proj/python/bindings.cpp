#include "mnls/bounds.hpp"
#include "mnls/config.hpp"
#include "mnls/diagnostics.hpp"
#include "mnls/harness.hpp"
#include "mnls/risk.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mnls;

namespace {

sampler::EntryLaw law_from(const std::string& name, int df) { return sampler::EntryLaw::parse(name, df); }

py::dict risk_dict(const risk::RiskReport& r) {
  py::dict out;
  out["bias_sq"] = r.bias_sq;
  out["variance"] = r.variance;
  out["risk"] = r.total;
  out["null_risk"] = r.null_risk;
  out["normalized_risk"] = r.normalized;
  return out;
}

model::ParameterVector as_parameter(const Vector& theta) {
  model::ParameterVector p;
  p.theta = theta;
  p.norm = theta.norm();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Minimum-norm least squares risk laboratory";

  py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<model::CovarianceModel, std::shared_ptr<model::CovarianceModel>>(m, "CovarianceModel")
      .def(py::init([](const Vector& eigenvalues, std::size_t spike_count, std::uint64_t basis_seed,
                       std::size_t reflections) {
             const auto d = static_cast<std::size_t>(eigenvalues.size());
             auto basis = reflections == 0 ? model::OrthogonalBasis::identity(d)
                                           : model::OrthogonalBasis::householder(d, basis_seed, reflections);
             return std::make_shared<model::CovarianceModel>(eigenvalues, std::move(basis), spike_count);
           }),
           py::arg("eigenvalues"), py::arg("spike_count") = 0, py::arg("basis_seed") = 0,
           py::arg("reflections") = 0)
      .def_property_readonly("dimension", &model::CovarianceModel::dimension)
      .def_property_readonly("spike_count", &model::CovarianceModel::spike_count)
      .def_property_readonly("eigenvalues", &model::CovarianceModel::eigenvalues)
      .def("eigenvector", &model::CovarianceModel::eigenvector, py::arg("j"))
      .def("dense", &model::CovarianceModel::dense);

  m.def(
      "equicorrelated",
      [](std::size_t d, double a) { return std::make_shared<model::CovarianceModel>(model::equicorrelated(d, a)); },
      py::arg("d"), py::arg("a"));

  m.def(
      "make_theta",
      [](const model::CovarianceModel& cov, double delta, double norm, std::vector<double> weights,
         std::uint64_t seed) {
        if (weights.empty()) weights.assign(cov.spike_count(), 1.0);
        return model::make_theta(cov, delta, norm, weights, seed).theta;
      },
      py::arg("model"), py::arg("delta"), py::arg("norm") = 1.0, py::arg("spike_weights") = std::vector<double>{},
      py::arg("seed") = 0);

  m.def(
      "sample_design",
      [](const model::CovarianceModel& cov, std::size_t n, const std::string& law, std::uint64_t seed, int df) {
        return sampler::sample_design(cov, n, law_from(law, df), seed);
      },
      py::arg("model"), py::arg("n"), py::arg("law") = "gaussian", py::arg("seed") = 0, py::arg("df") = 5);

  m.def(
      "sample_labels",
      [](const DesignMatrix& X, const Vector& theta, double sigma, const std::string& law, std::uint64_t seed) {
        return sampler::sample_labels(X, theta, sigma, law_from(law, 5), seed);
      },
      py::arg("X"), py::arg("theta"), py::arg("sigma") = 1.0, py::arg("law") = "gaussian", py::arg("seed") = 0);

  m.def(
      "fit_mnls", [](const DesignMatrix& X, const Vector& Y) { return estimator::fit_mnls(X, Y).theta; },
      py::arg("X"), py::arg("Y"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "sample_eigenvalues",
      [](const DesignMatrix& X) {
        const auto dd = estimator::dual_decompose(X);
        Vector out(static_cast<Eigen::Index>(dd.samples()));
        for (std::size_t j = 1; j <= dd.samples(); ++j) out[static_cast<Eigen::Index>(j - 1)] = dd.eigenvalue(j);
        return out;
      },
      py::arg("X"));

  m.def(
      "conditional_risk",
      [](const model::CovarianceModel& cov, const DesignMatrix& X, const Vector& theta, double sigma) {
        const auto dd = estimator::dual_decompose(X);
        return risk_dict(risk::conditional_risk(cov, dd, as_parameter(theta), sigma));
      },
      py::arg("model"), py::arg("X"), py::arg("theta"), py::arg("sigma") = 1.0);

  m.def(
      "deterministic_bounds",
      [](const model::CovarianceModel& cov, const DesignMatrix& X, const Vector& theta, double sigma) {
        const auto dd = estimator::dual_decompose(X);
        const std::size_t m_max = bounds::max_deterministic_index(cov, dd);
        py::dict out;
        out["bias"] = bounds::bias_bound_det_all(cov, dd, theta, m_max);
        out["variance"] = bounds::variance_bound_det_all(cov, dd, m_max, sigma);
        return out;
      },
      py::arg("model"), py::arg("X"), py::arg("theta"), py::arg("sigma") = 1.0);

  m.def(
      "projector_distance",
      [](const model::CovarianceModel& cov, const DesignMatrix& X, std::size_t j) {
        return diagnostics::projector_dist(estimator::dual_decompose(X), cov, j);
      },
      py::arg("model"), py::arg("X"), py::arg("j"));

  m.def(
      "op_norm_diff",
      [](const DesignMatrix& X, const model::CovarianceModel& cov, double tol, int max_iter) {
        return diagnostics::op_norm_diff(X, cov, tol, max_iter);
      },
      py::arg("X"), py::arg("model"), py::arg("tol") = 1e-6, py::arg("max_iter") = 1000);

  m.def(
      "bai_yin",
      [](std::size_t n, std::size_t p, const std::string& law, std::uint64_t seed, std::size_t reps,
         unsigned threads) {
        const auto r = diagnostics::bai_yin_check(n, p, law_from(law, 5), seed, reps, threads);
        py::dict out;
        out["mean_max"] = r.mean_max;
        out["mean_min"] = r.mean_min;
        out["target_max"] = r.target_max;
        out["target_min"] = r.target_min;
        return out;
      },
      py::arg("n"), py::arg("p"), py::arg("law") = "gaussian", py::arg("seed") = 0, py::arg("reps") = 20,
      py::arg("threads") = 1);

  m.def(
      "canonical_config", [](const std::string& text) { return harness::serialize_config(harness::parse_config(text)); },
      py::arg("text"));

  m.def(
      "run_sweep",
      [](const std::string& text, const std::filesystem::path& out, unsigned threads) {
        const auto config = harness::parse_config(text);
        harness::SweepOutcome o;
        {
          py::gil_scoped_release release;
          o = harness::run_sweep(config, threads, out);
        }
        py::dict d;
        d["csv"] = o.csv;
        d["sidecar"] = o.sidecar;
        d["rows"] = o.rows;
        d["error_rows"] = o.error_rows;
        return d;
      },
      py::arg("config_text"), py::arg("out"), py::arg("threads") = 0);
}
