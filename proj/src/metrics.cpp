// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/metrics.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "fpacoh/errors.hpp"
#include "fpacoh/rng.hpp"

namespace fpacoh {
namespace {

TaskDataset evaluate_on(const Task& task, Matrix x) {
  TaskDataset d;
  d.y.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) d.y(i) = task.evaluate(x.row(i).transpose());
  d.x = std::move(x);
  return d;
}

CalibrationReport report_from_cdf(Vector cdf, int levels) {
  if (cdf.size() == 0) throw EmptyData("calibration_error: no points");
  CalibrationReport r;
  r.levels = calibration_levels(levels);
  r.frequencies.resize(levels);
  r.coverage.resize(levels);
  const auto m = static_cast<double>(cdf.size());
  double sq = 0.0;
  for (int h = 0; h < levels; ++h) {
    const double q = r.levels(h);
    r.frequencies(h) = static_cast<double>((cdf.array() <= q).count()) / m;
    r.coverage(h) = static_cast<double>(((2.0 * cdf.array() - 1.0).abs() <= q).count()) / m;
    sq += (r.frequencies(h) - q) * (r.frequencies(h) - q);
  }
  r.error = std::sqrt(sq / levels);
  r.cdf = std::move(cdf);
  return r;
}

}  // namespace

GaussianPredictive predictive(const Surrogate& model, const Matrix& x) {
  const Marginals m = model.predict(x);
  return {m.mean, (m.var.array().max(0.0) + model.noise_var()).sqrt().matrix()};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

Vector calibration_levels(int m) {
  Vector q(m);
  for (int h = 1; h <= m; ++h) q(h - 1) = static_cast<double>(h) / static_cast<double>(m + 1);
  return q;
}

CalibrationReport calibration_error(const GaussianPredictive& p, const Vector& y, int levels) {
  if (p.mean.size() != y.size() || p.std.size() != y.size()) {
    throw DimensionMismatch("calibration_error: predictive and targets differ in length");
  }
  Vector cdf(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (!(p.std(j) > 0.0)) throw DegenerateVariance("calibration_error: non-positive predictive std");
    cdf(j) = normal_cdf((y(j) - p.mean(j)) / p.std(j));
  }
  return report_from_cdf(std::move(cdf), levels);
}

double test_log_likelihood(const GaussianPredictive& p, const Vector& y) {
  if (y.size() == 0) throw EmptyData("test_log_likelihood: no points");
  if (p.mean.size() != y.size() || p.std.size() != y.size()) {
    throw DimensionMismatch("test_log_likelihood: predictive and targets differ in length");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (!(p.std(j) > 0.0)) throw DegenerateVariance("test_log_likelihood: non-positive predictive std");
    const double z = (y(j) - p.mean(j)) / p.std(j);
    total += -0.5 * z * z - std::log(p.std(j)) - 0.5 * kLog2Pi;
  }
  return total / static_cast<double>(y.size());
}

CalibrationReport merge_calibration(const std::vector<CalibrationReport>& reports, int levels) {
  Eigen::Index total = 0;
  for (const auto& r : reports) total += r.cdf.size();
  Vector cdf(total);
  Eigen::Index at = 0;
  for (const auto& r : reports) {
    cdf.segment(at, r.cdf.size()) = r.cdf;
    at += r.cdf.size();
  }
  return report_from_cdf(std::move(cdf), levels);
}

SupervisedResult supervised_eval(const Environment& env, Learner learner, int n_tasks, int task_size,
                                 std::uint64_t seed, const LearnerOptions& options) {
  if (n_tasks < 2) throw ConfigError("n", "supervised evaluation needs at least two tasks");
  if (task_size < 2) throw ConfigError("T", "supervised evaluation needs at least two points per task");
  const int n_train = n_tasks / 2;
  std::vector<TaskDataset> train;
  std::vector<TaskDataset> test;
  for (int i = 0; i < n_tasks; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    auto task_rng = make_rng(seed, {1, idx});
    const auto task = env.sample_task(task_rng, i < n_train ? Split::kMetaTrain : Split::kMetaTest);
    auto x_rng = make_rng(seed, {4, idx});
    TaskDataset d = evaluate_on(*task, task->domain().sample_uniform(x_rng, task_size));
    (i < n_train ? train : test).push_back(std::move(d));
  }

  auto model = make_surrogate(learner, train, env, options, derive_seed(seed, {3}));
  SupervisedResult out;
  std::vector<CalibrationReport> reports;
  for (const auto& d : test) {
    const Eigen::Index half = d.size() / 2;
    model->condition(TaskDataset{d.x.topRows(half), d.y.head(half)});
    const Matrix xq = d.x.bottomRows(d.size() - half);
    const Vector yq = d.y.tail(d.size() - half);
    const GaussianPredictive p = predictive(*model, xq);
    out.task_log_likelihood.push_back(test_log_likelihood(p, yq));
    reports.push_back(calibration_error(p, yq));
    out.task_calibration_error.push_back(reports.back().error);
  }
  for (std::size_t k = 0; k < test.size(); ++k) {
    out.log_likelihood += out.task_log_likelihood[k] / static_cast<double>(test.size());
    out.calibration_error += out.task_calibration_error[k] / static_cast<double>(test.size());
  }
  out.pooled = merge_calibration(reports);
  return out;
}

CalibrationStudyResult calibration_study(const Environment& env, Learner learner, int n_tasks, int task_size,
                                         std::uint64_t seed, const LearnerOptions& options,
                                         const CalibrationStudyOptions& study) {
  const auto meta_data = collect_meta_data(env, n_tasks, task_size, derive_seed(seed, {1}));
  auto model = make_surrogate(learner, meta_data, env, options, derive_seed(seed, {3}));

  CalibrationStudyResult out;
  out.context_sizes = study.context_sizes;
  std::vector<std::vector<CalibrationReport>> per_size(study.context_sizes.size());
  for (int j = 0; j < study.test_tasks; ++j) {
    const auto jdx = static_cast<std::uint64_t>(j);
    auto task_rng = make_rng(seed, {5, jdx});
    const auto task = env.sample_task(task_rng, Split::kMetaTest);
    auto eval_rng = make_rng(seed, {7, jdx});
    const TaskDataset eval = evaluate_on(*task, task->domain().sample_uniform(eval_rng, study.eval_points));
    for (std::size_t c = 0; c < study.context_sizes.size(); ++c) {
      auto ctx_rng = make_rng(seed, {6, jdx, static_cast<std::uint64_t>(study.context_sizes[c])});
      model->condition(evaluate_on(*task, task->domain().sample_uniform(ctx_rng, study.context_sizes[c])));
      per_size[c].push_back(calibration_error(predictive(*model, eval.x), eval.y));
    }
  }
  for (const auto& reports : per_size) {
    out.reports.push_back(merge_calibration(reports));
    out.error += out.reports.back().error / static_cast<double>(per_size.size());
  }
  return out;
}

void write_calibration_csv(std::ostream& out, const CalibrationReport& report) {
  out << "level,frequency,coverage\n";
  for (Eigen::Index h = 0; h < report.levels.size(); ++h) {
    out << format_double(report.levels(h)) << ',' << format_double(report.frequencies(h)) << ','
        << format_double(report.coverage(h)) << '\n';
  }
}

}  // namespace fpacoh
