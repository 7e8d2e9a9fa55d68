#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "compatkit/commands.hpp"
#include "compatkit/distill.hpp"
#include "compatkit/experiment.hpp"
#include "compatkit/log_io.hpp"
#include "compatkit/metrics.hpp"
#include "compatkit/report_io.hpp"

namespace py = pybind11;
using namespace compatkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

toy::Tensor2 to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return toy::Tensor2(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

TaskKind task_of(const std::string& name) {
  const auto kind = parse_task_kind(name);
  if (!kind) throw ConfigError("task", "unknown task '" + name + "'");
  return *kind;
}

SimilarityMetric metric_for(const std::vector<EvalRecord>& records, const std::string& metric) {
  if (!metric.empty()) return parse_metric(metric);
  if (records.empty()) throw EmptyLogError("cannot pick a default metric for an empty log");
  return default_metric(records.front().task);
}

std::vector<EvalRecord> checked(ParsedLog parsed) {
  auto issues = validate_log(parsed.records);
  parsed.issues.insert(parsed.issues.end(), issues.begin(), issues.end());
  if (!parsed.issues.empty()) {
    throw Error("invalid record '" + parsed.issues.front().instance_id + "': " + parsed.issues.front().reason);
  }
  return std::move(parsed.records);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Model-update compatibility metrics and compatibility-aware distillation on a toy model";

  static py::exception<Error> base_error(m, "CompatkitError");
  py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<ParseError>(m, "ParseError", base_error.ptr());
  py::register_exception<TaskMismatchError>(m, "TaskMismatchError", base_error.ptr());
  py::register_exception<EmptyLogError>(m, "EmptyLogError", base_error.ptr());
  py::register_exception<UndefinedRatioError>(m, "UndefinedRatioError", base_error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base_error.ptr());
  py::register_exception<DomainError>(m, "DomainError", base_error.ptr());
  py::register_exception<MismatchError>(m, "MismatchError", base_error.ptr());

  py::class_<Prediction>(m, "Prediction")
      .def(py::init([](std::string text, std::optional<std::size_t> choice_index,
                       std::optional<std::vector<double>> loglikes) {
             return Prediction{std::move(text), choice_index, std::move(loglikes)};
           }),
           py::arg("text") = "", py::arg("choice_index") = py::none(), py::arg("choice_loglikelihoods") = py::none())
      .def_static("from_loglikelihoods", &Prediction::from_loglikelihoods)
      .def_static("from_text", &Prediction::from_text)
      .def_readwrite("text", &Prediction::text)
      .def_readwrite("choice_index", &Prediction::choice_index)
      .def_readwrite("choice_loglikelihoods", &Prediction::choice_loglikelihoods)
      .def("chosen", &Prediction::chosen)
      .def("__eq__", [](const Prediction& a, const Prediction& b) { return a == b; });

  py::class_<EvalRecord>(m, "EvalRecord")
      .def(py::init([](std::string id, const std::string& task, std::variant<std::size_t, std::string> truth,
                       Prediction old_pred, Prediction new_pred) {
             EvalRecord r;
             r.instance_id = std::move(id);
             r.task = task_of(task);
             if (auto* i = std::get_if<std::size_t>(&truth)) r.ground_truth = *i;
             else r.ground_truth = std::get<std::string>(truth);
             r.pred_old = std::move(old_pred);
             r.pred_new = std::move(new_pred);
             return r;
           }),
           py::arg("instance_id"), py::arg("task"), py::arg("ground_truth"), py::arg("old"), py::arg("new"))
      .def_readwrite("instance_id", &EvalRecord::instance_id)
      .def_property_readonly("task", [](const EvalRecord& r) { return std::string(to_string(r.task)); })
      .def_property_readonly("ground_truth",
                             [](const EvalRecord& r) -> py::object {
                               if (auto* i = std::get_if<std::size_t>(&r.ground_truth)) return py::int_(*i);
                               return py::str(std::get<std::string>(r.ground_truth));
                             })
      .def_readwrite("old", &EvalRecord::pred_old)
      .def_readwrite("new", &EvalRecord::pred_new)
      .def("__eq__", [](const EvalRecord& a, const EvalRecord& b) { return a == b; });

  m.def("read_log", [](const std::filesystem::path& path) { return checked(read_log(path)); }, py::arg("path"),
        "Reads and validates a JSON-lines prediction log.");
  m.def("parse_log",
        [](const std::string& text) {
          std::istringstream in(text);
          return checked(parse_log(in));
        },
        py::arg("text"));
  m.def("write_log",
        [](const std::filesystem::path& path, const std::vector<EvalRecord>& records) { write_log(path, records); },
        py::arg("path"), py::arg("records"));
  m.def("validate_log",
        [](const std::vector<EvalRecord>& records) {
          std::vector<std::pair<std::string, std::string>> out;
          for (const auto& i : validate_log(records)) out.emplace_back(i.instance_id, i.reason);
          return out;
        },
        py::arg("records"));

  m.def("evaluate",
        [](const std::vector<EvalRecord>& records, const std::string& metric) {
          return to_python(to_json(build_report(records, metric_for(records, metric))));
        },
        py::arg("records"), py::arg("metric") = "", "Compatibility report of an (old, new) log as a dict.");
  m.def("compare",
        [](const py::object& base, const py::object& candidate) {
          return to_python(to_json(compare_reports(report_from_json(from_python(base)),
                                                   report_from_json(from_python(candidate)))));
        },
        py::arg("base"), py::arg("candidate"));
  m.def("check_thresholds",
        [](const py::object& delta, const std::string& rules) {
          return cli::check_thresholds(delta_from_json(from_python(delta)), cli::parse_thresholds(rules));
        },
        py::arg("delta"), py::arg("rules"), "Violated gate rules; empty when the gate passes.");

  m.def("rouge_n",
        [](const std::string& cand, const std::string& ref, std::size_t n, const std::string& stat) {
          const RougeStat s = stat == "precision" ? RougeStat::Precision
                              : stat == "recall"  ? RougeStat::Recall
                              : stat == "f1"      ? RougeStat::F1
                                                  : throw ConfigError("stat", "expected precision, recall or f1");
          return rouge_n(cand, ref, n, s);
        },
        py::arg("candidate"), py::arg("reference"), py::arg("n") = 1, py::arg("stat") = "f1");

  m.def("mask_strategies", [] {
    std::vector<std::string> out;
    for (auto s : distill::all_mask_strategies()) out.emplace_back(distill::to_string(s));
    return out;
  });
  m.def("kl_term",
        [](const std::vector<double>& teacher, const std::vector<double>& student, double temperature) {
          return distill::kl_term(teacher, student, temperature);
        },
        py::arg("teacher_logits"), py::arg("student_logits"), py::arg("temperature") = 2.0);
  m.def("compute_mask",
        [](const std::string& strategy, const Array& student, const Array& v1, const std::vector<int>& targets,
           std::vector<std::size_t> sequence_ids) {
          if (sequence_ids.empty()) sequence_ids.assign(targets.size(), 0);
          return distill::compute_mask(distill::parse_mask_strategy(strategy), to_tensor(student), to_tensor(v1),
                                       targets, sequence_ids);
        },
        py::arg("strategy"), py::arg("student_logits"), py::arg("v1_logits"), py::arg("targets"),
        py::arg("sequence_ids") = std::vector<std::size_t>{});
  m.def("compat_loss",
        [](const Array& student, const Array& v1, const Array& v2, const std::vector<int>& targets,
           const std::vector<std::uint8_t>& mask, double temperature, std::optional<double> lambda, bool aux_ce) {
          distill::DistillConfig cfg;
          cfg.temperature = temperature;
          cfg.use_aux_ce = aux_ce;
          cfg.lambda = lambda.value_or(aux_ce ? distill::DistillConfig::kDefaultAuxLambda : 1.0);
          return distill::compat_loss(to_tensor(student), to_tensor(v1), to_tensor(v2), targets, mask, cfg);
        },
        py::arg("student_logits"), py::arg("v1_logits"), py::arg("v2_logits"), py::arg("targets"), py::arg("mask"),
        py::arg("temperature") = 2.0, py::arg("lambda_") = py::none(), py::arg("aux_ce") = false);

  m.def("default_experiment_config", [] { return to_python(to_json(harness::default_experiment_config())); });
  m.def("run_experiment",
        [](const py::object& config, std::optional<std::filesystem::path> output) {
          const auto cfg = config.is_none() ? harness::default_experiment_config()
                                            : harness::parse_experiment_config(from_python(config));
          harness::SuiteResult suite;
          {
            py::gil_scoped_release release;
            suite = harness::run_experiment_suite(cfg, output);
          }
          py::list runs;
          for (const auto& r : suite.runs) {
            py::dict d;
            d["seed"] = r.seed;
            d["vanilla"] = to_python(to_json(r.vanilla));
            d["compat"] = to_python(to_json(r.compat));
            d["delta"] = to_python(to_json(r.delta));
            runs.append(d);
          }
          py::dict out;
          out["runs"] = runs;
          out["summary"] = suite.summary_table;
          out["sweep_spearman"] = suite.sweep_spearman ? py::object(py::float_(*suite.sweep_spearman)) : py::none();
          return out;
        },
        py::arg("config") = py::none(), py::arg("output") = py::none(),
        "Runs the multi-seed update experiment; `config` is a dict in the experiment-config layout.");
}
