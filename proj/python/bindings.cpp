#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qubonn/pipeline.hpp"
#include "qubonn/pwl.hpp"
#include "qubonn/qcbo.hpp"
#include "qubonn/qcgd.hpp"
#include "qubonn/qnet.hpp"
#include "qubonn/qubo.hpp"

namespace py = pybind11;
using namespace qubonn;

PYBIND11_MODULE(_qubonn, m) {
  m.doc() = "FIP-encoded quantized network training over QUBO oracles";

  // ---- piecewise functions
  py::class_<pwl::PiecewiseFn>(m, "PiecewiseFn")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("breakpoints"),
           py::arg("values"))
      .def("eval", &pwl::PiecewiseFn::eval)
      .def("locate_interval", &pwl::PiecewiseFn::locate_interval)
      .def_property_readonly("breakpoints", &pwl::PiecewiseFn::breakpoints)
      .def_property_readonly("values", &pwl::PiecewiseFn::values)
      .def("to_json", &pwl::PiecewiseFn::to_json)
      .def_static("from_json", &pwl::PiecewiseFn::from_json);

  m.def("build_midpoint_constant",
        [](const std::function<double(double)>& f, std::vector<double> bp) {
          return pwl::build_midpoint_constant(f, std::move(bp));
        });
  m.def("segment_count_for_error", &pwl::segment_count_for_error);
  m.def("network_error_bound", &pwl::network_error_bound);
  m.def("sigmoid", &pwl::sigmoid);

  // ---- QUBO instances and oracles
  py::class_<qubo::QuboInstance>(m, "QuboInstance")
      .def(py::init<int, double>(), py::arg("n"), py::arg("offset") = 0.0)
      .def("set", &qubo::QuboInstance::set)
      .def("add", &qubo::QuboInstance::add)
      .def("coeff", &qubo::QuboInstance::coeff)
      .def("value", &qubo::QuboInstance::value)
      .def_property_readonly("n", &qubo::QuboInstance::size)
      .def_property_readonly("offset", &qubo::QuboInstance::offset)
      .def("to_json", &qubo::QuboInstance::to_json)
      .def_static("from_json", &qubo::QuboInstance::from_json);

  py::class_<qubo::BruteForceResult>(m, "BruteForceResult")
      .def_readonly("best", &qubo::BruteForceResult::best)
      .def_readonly("best_value", &qubo::BruteForceResult::best_value)
      .def_readonly("second_value", &qubo::BruteForceResult::second_value);

  py::class_<qubo::OracleSample>(m, "OracleSample")
      .def_readonly("assignment", &qubo::OracleSample::assignment)
      .def_readonly("objective", &qubo::OracleSample::objective)
      .def_readonly("oracle", &qubo::OracleSample::oracle);

  m.def("brute_force_solve", &qubo::brute_force_solve, py::arg("q"), py::arg("cap") = 26);
  m.def(
      "sa_solve",
      [](const qubo::QuboInstance& q, double t_init, double t_final, int sweeps, uint64_t seed) {
        return qubo::sa_solve(q, {t_init, t_final, sweeps}, seed);
      },
      py::arg("q"), py::arg("t_init") = 0.0, py::arg("t_final") = 1e-3, py::arg("sweeps") = 0,
      py::arg("seed") = 1);
  m.def(
      "best_of_sa",
      [](const qubo::QuboInstance& q, int samples, uint64_t seed) {
        return qubo::best_of(qubo::make_sa_oracle(), q, samples, seed);
      },
      py::arg("q"), py::arg("samples"), py::arg("seed") = 1);
  m.def("truncate", &qubo::truncate);
  m.def("truncation_error_bound", &qubo::truncation_error_bound);

  // ---- FIP model building and the hybrid loop
  py::class_<qcbo::NetSpec>(m, "NetSpec")
      .def_static(
          "experiment",
          [](std::vector<double> breakpoints, std::vector<int> dims) {
            return pipeline::experiment_netspec(breakpoints, dims);
          },
          py::arg("breakpoints"), py::arg("dims") = std::vector<int>{3, 2, 1})
      .def_property_readonly("dims", [](const qcbo::NetSpec& s) { return s.dims; })
      .def("coded_activation_values", &qcbo::NetSpec::coded_activation_values)
      .def("activation_bits", &qcbo::NetSpec::activation_bits)
      .def("to_json", &qcbo::NetSpec::to_json)
      .def_static("from_json", &qcbo::NetSpec::from_json);

  py::class_<qcbo::QcboModel>(m, "QcboModel")
      .def_property_readonly("var_count", &qcbo::QcboModel::var_count)
      .def("to_json", &qcbo::QcboModel::to_json)
      .def_static("from_json", &qcbo::QcboModel::from_json);

  py::class_<qcbo::SpinReport>(m, "SpinReport")
      .def_readonly("per_family", &qcbo::SpinReport::per_family)
      .def_readonly("total", &qcbo::SpinReport::total);

  m.def("build_fip_model",
        [](const qcbo::NetSpec& spec, const std::vector<std::vector<double>>& features,
           const std::vector<int>& labels, const std::vector<double>& weights) {
          if (features.size() != labels.size() ||
              (!weights.empty() && weights.size() != features.size())) {
            throw std::invalid_argument("features/labels/weights length mismatch");
          }
          std::vector<qcbo::Sample> data;
          for (std::size_t i = 0; i < features.size(); ++i) {
            data.push_back({features[i], labels[i], weights.empty() ? 1.0 : weights[i]});
          }
          return qcbo::build_fip_model(spec, data);
        },
        py::arg("spec"), py::arg("features"), py::arg("labels"),
        py::arg("weights") = std::vector<double>{});
  m.def("spin_report", &qcbo::spin_report);
  m.def("sample_complexity", &qcbo::sample_complexity);
  m.def(
      "linearize_all",
      [](const qcbo::QcboModel& model, const std::string& strategy) {
        return qcbo::linearize_all(model, strategy == "rosenberg"
                                              ? qcbo::LinearizeStrategy::Rosenberg
                                              : qcbo::LinearizeStrategy::Constraints);
      },
      py::arg("model"), py::arg("strategy") = "constraints");
  m.def("penalty_qubo", [](const qcbo::QcboModel& linearized) {
    qcbo::PenaltyForm form = qcbo::penalty_qubo(linearized);
    return py::make_tuple(form.qubo, form.weight);
  });

  py::class_<qcgd::TraceRow>(m, "TraceRow")
      .def_readonly("t", &qcgd::TraceRow::t)
      .def_readonly("obj_surrogate", &qcgd::TraceRow::obj_surrogate)
      .def_readonly("infeasibility", &qcgd::TraceRow::infeasibility)
      .def_readonly("skipped", &qcgd::TraceRow::skipped);

  m.def(
      "qcgd_run",
      [](const qcbo::QcboModel& model, int iterations, double p0, int truncation_digits,
         bool lazy, uint64_t seed, std::optional<double> reference) {
        qcgd::RunConfig cfg;
        cfg.iterations = iterations;
        cfg.p0 = p0;
        cfg.truncation_digits = truncation_digits;
        cfg.lazy = lazy;
        cfg.seed = seed;
        cfg.objective_reference = reference;
        pipeline::QcgdSolveResult r = pipeline::qcgd_solve(model, cfg, "exact");
        return py::make_tuple(r.run.solution, r.run.trace, r.run.converged_at);
      },
      py::arg("model"), py::arg("iterations") = 1000, py::arg("p0") = 0.5,
      py::arg("truncation_digits") = 0, py::arg("lazy") = false, py::arg("seed") = 1,
      py::arg("reference") = std::nullopt);

  m.def("toy_equality_model", &pipeline::toy_equality_model);
  m.def("toy_unique_model", &pipeline::toy_unique_model);
  m.def("samples_per_iteration", &qcgd::samples_per_iteration);
  m.def("tts_estimate", &qcgd::tts_estimate);
}
