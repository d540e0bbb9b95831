// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fpacoh/bo.hpp"
#include "fpacoh/errors.hpp"
#include "fpacoh/experiment.hpp"
#include "fpacoh/linalg.hpp"
#include "fpacoh/meta_learners.hpp"
#include "fpacoh/metrics.hpp"

namespace py = pybind11;
using namespace fpacoh;

namespace {

using Dataset = std::pair<Matrix, Vector>;

std::vector<TaskDataset> to_tasks(const std::vector<Dataset>& data) {
  std::vector<TaskDataset> out;
  out.reserve(data.size());
  for (const auto& [x, y] : data) out.push_back({x, y});
  return out;
}

std::vector<Dataset> from_tasks(const std::vector<TaskDataset>& tasks) {
  std::vector<Dataset> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.emplace_back(t.x, t.y);
  return out;
}

Split parse_split(const std::string& s) {
  if (s == "meta_train") return Split::kMetaTrain;
  if (s == "meta_test") return Split::kMetaTest;
  throw ConfigError("split", "expected 'meta_train' or 'meta_test', got '" + s + "'");
}

Learner learner_or_throw(const std::string& name) {
  const auto l = parse_learner(name);
  if (!l) throw ConfigError("learner", "unknown learner '" + name + "'");
  return *l;
}

py::dict trace_dict(const BoTrace& trace) {
  const RegretSeries r = regret_metrics(trace);
  const TaskDataset d = trace.data();
  py::dict out;
  out["x"] = d.x;
  out["y"] = d.y;
  out["simple_regret"] = r.simple;
  out["inference_regret"] = r.inference;
  out["optimum"] = trace.optimum;
  return out;
}

py::dict report_dict(const CalibrationReport& r) {
  py::dict out;
  out["error"] = r.error;
  out["levels"] = r.levels;
  out["frequencies"] = r.frequencies;
  out["coverage"] = r.coverage;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Meta-learned GP priors for Bayesian optimization";
  m.attr("__version__") = FPACOH_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<MetaTrainConfig>(m, "MetaTrainConfig")
      .def(py::init<>())
      .def_readwrite("lr", &MetaTrainConfig::lr)
      .def_readwrite("lr_decay", &MetaTrainConfig::lr_decay)
      .def_readwrite("weight_decay", &MetaTrainConfig::weight_decay)
      .def_readwrite("task_batch", &MetaTrainConfig::task_batch)
      .def_readwrite("iterations", &MetaTrainConfig::iterations)
      .def_readwrite("hyperprior_lengthscale", &MetaTrainConfig::hyperprior_lengthscale)
      .def_readwrite("hyperprior_outputscale", &MetaTrainConfig::hyperprior_outputscale)
      .def_readwrite("kl_weight", &MetaTrainConfig::kl_weight)
      .def_readwrite("feature_dim", &MetaTrainConfig::feature_dim)
      .def_readwrite("hidden_layers", &MetaTrainConfig::hidden_layers)
      .def_readwrite("hidden_width", &MetaTrainConfig::hidden_width)
      .def_readwrite("seed", &MetaTrainConfig::seed)
      .def("validate", &MetaTrainConfig::validate);

  py::class_<Task, std::shared_ptr<Task>>(m, "Task")
      .def("evaluate", &Task::evaluate, py::arg("x"))
      .def(
          "evaluate_batch",
          [](const Task& t, const Matrix& x) {
            Vector y(x.rows());
            for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = t.evaluate(x.row(i).transpose());
            return y;
          },
          py::arg("x"))
      .def("sample_uniform",
           [](const Task& t, Eigen::Index n, std::uint64_t seed) {
             std::mt19937_64 rng(seed);
             return t.domain().sample_uniform(rng, n);
           },
           py::arg("n"), py::arg("seed") = 0)
      .def_property_readonly("dim", [](const Task& t) { return t.domain().dim(); })
      .def_property_readonly("optimum_value", &Task::optimum_value)
      .def_property_readonly("optimum_x", &Task::optimum_x)
      .def_property_readonly("parameters", &Task::parameters);

  py::class_<Environment>(m, "Environment")
      .def_property_readonly("name", &Environment::name)
      .def_property_readonly("dim", &Environment::dim)
      .def_property_readonly("default_num_tasks", &Environment::default_num_tasks)
      .def_property_readonly("default_task_size", &Environment::default_task_size)
      .def(
          "sample_task",
          [](const Environment& env, std::uint64_t seed, const std::string& split) {
            std::mt19937_64 rng(seed);
            return std::const_pointer_cast<Task>(env.sample_task(rng, parse_split(split)));
          },
          py::arg("seed"), py::arg("split") = "meta_train");

  m.def("environment_names", &environment_names);
  m.def(
      "make_environment",
      [](const std::string& name, const std::string& hpo_dir) {
        return make_environment(name, EnvironmentOptions{hpo_dir});
      },
      py::arg("name"), py::arg("hpo_dir") = "");
  m.def("learner_names", &learner_names);

  m.def(
      "collect_meta_data",
      [](const Environment& env, int n, int t, std::uint64_t seed) {
        return from_tasks(collect_meta_data(env, n, t, seed));
      },
      py::arg("env"), py::arg("n"), py::arg("T"), py::arg("seed"),
      "Vanilla GP-UCB traces as a list of (X, y) pairs.");

  py::class_<Surrogate>(m, "Surrogate")
      .def_property_readonly("name", &Surrogate::name)
      .def(
          "condition", [](Surrogate& s, const Matrix& x, const Vector& y) { s.condition({x, y}); }, py::arg("x"),
          py::arg("y"))
      .def(
          "predict",
          [](const Surrogate& s, const Matrix& x) {
            const Marginals p = s.predict(x);
            return std::make_pair(p.mean, p.var);
          },
          py::arg("x"), "Latent mean and variance in raw units.")
      .def_property_readonly("noise_var", &Surrogate::noise_var)
      .def(
          "ucb", [](const Surrogate& s, const Matrix& x, double beta) { return ucb(s, x, beta); }, py::arg("x"),
          py::arg("beta") = 2.0);

  m.def(
      "make_surrogate",
      [](const std::string& learner, const std::vector<Dataset>& meta_data, const Environment& env,
         const MetaTrainConfig& meta, std::uint64_t seed) {
        LearnerOptions options;
        options.meta = meta;
        const auto tasks = to_tasks(meta_data);
        return make_surrogate(learner_or_throw(learner), tasks, env, options, seed);
      },
      py::arg("learner"), py::arg("meta_data"), py::arg("env"), py::arg("config") = MetaTrainConfig{},
      py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());

  m.def(
      "bo_run",
      [](const Task& task, Surrogate& model, int steps, std::uint64_t seed, double beta) {
        std::mt19937_64 rng(seed);
        BoOptions options;
        options.beta = beta;
        return trace_dict(bo_run(task, model, steps, rng, options));
      },
      py::arg("task"), py::arg("model"), py::arg("steps"), py::arg("seed") = 0, py::arg("beta") = 2.0);

  m.def(
      "kl_mvn",
      [](const Vector& mp, const Matrix& sp, const Vector& mq, const Matrix& sq) {
        return kl_mvn(Mvn(mp, sp), Mvn(mq, sq));
      },
      py::arg("mean_p"), py::arg("cov_p"), py::arg("mean_q"), py::arg("cov_q"));
  m.def(
      "mvn_logpdf", [](const Vector& mean, const Matrix& cov, const Vector& x) { return mvn_logpdf(Mvn(mean, cov), x); },
      py::arg("mean"), py::arg("cov"), py::arg("x"));
  m.def("kl_coefficient", &kl_coefficient, py::arg("kappa"), py::arg("n_tasks"), py::arg("task_size"));

  m.def(
      "calibration_error",
      [](const Vector& mean, const Vector& std, const Vector& y, int levels) {
        return report_dict(calibration_error(GaussianPredictive{mean, std}, y, levels));
      },
      py::arg("mean"), py::arg("std"), py::arg("y"), py::arg("levels") = 20);
  m.def(
      "test_log_likelihood",
      [](const Vector& mean, const Vector& std, const Vector& y) {
        return test_log_likelihood(GaussianPredictive{mean, std}, y);
      },
      py::arg("mean"), py::arg("std"), py::arg("y"));

  m.def("default_config_json", []() { return config_to_json(ExperimentConfig{}); });
  m.def(
      "normalize_config_json", [](const std::string& text) { return config_to_json(config_from_json(text)); },
      py::arg("text"), "Parses and re-serializes a config, filling defaults.");
  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig config = config_from_json(config_json);
        RunManifest manifest;
        {
          py::gil_scoped_release release;
          manifest = run_experiment(config);
        }
        py::list seeds;
        for (const auto& s : manifest.seeds) {
          py::dict d;
          d["seed"] = s.seed;
          d["ok"] = s.ok;
          d["error"] = s.error;
          d["directory"] = s.directory;
          d["files"] = s.files;
          seeds.append(d);
        }
        py::dict out;
        out["directory"] = manifest.directory;
        out["seeds"] = seeds;
        out["ok"] = manifest.all_ok();
        return out;
      },
      py::arg("config_json"));
  m.def("aggregate", &aggregate, py::arg("paths"), py::arg("out_dir"));
}
