// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fpacoh/bo.hpp"

namespace fpacoh {

/// Per-point Gaussian predictive distributions.
struct GaussianPredictive {
  Vector mean;
  Vector std;
};

/// Predictive over y (latent variance plus the model's noise variance) in raw units.
GaussianPredictive predictive(const Surrogate& model, const Matrix& x);

struct CalibrationReport {
  Vector levels;       // q_h = h / (M + 1), h = 1..M
  Vector frequencies;  // fraction of points with F(y_j) <= q_h
  Vector coverage;     // fraction of points inside the central q_h interval
  Vector cdf;          // F(y_j) per point
  double error = 0.0;  // sqrt(mean_h (frequencies_h - q_h)^2)
};

double normal_cdf(double z);

Vector calibration_levels(int m = 20);

/// Throws DegenerateVariance if any std is not positive, EmptyData if there
/// are no points.
CalibrationReport calibration_error(const GaussianPredictive& predictive, const Vector& y, int levels = 20);

/// Mean Gaussian log density of the targets.
double test_log_likelihood(const GaussianPredictive& predictive, const Vector& y);

/// Pools the CDF values of several reports into one.
CalibrationReport merge_calibration(const std::vector<CalibrationReport>& reports, int levels = 20);

struct SupervisedResult {
  double log_likelihood = 0.0;      // mean over meta-test tasks
  double calibration_error = 0.0;   // mean over meta-test tasks
  std::vector<double> task_log_likelihood;
  std::vector<double> task_calibration_error;
  CalibrationReport pooled;         // calibration over all meta-test points
};

/// n tasks with T uniformly sampled inputs each; the first half meta-trains the
/// learner, each remaining task is split into context and test halves.
SupervisedResult supervised_eval(const Environment& env, Learner learner, int n_tasks, int task_size,
                                 std::uint64_t seed, const LearnerOptions& options = {});

struct CalibrationStudyOptions {
  std::vector<int> context_sizes{1, 8};
  int test_tasks = 10;
  int eval_points = 200;
};

struct CalibrationStudyResult {
  std::vector<int> context_sizes;
  std::vector<CalibrationReport> reports;  // one per context size, pooled over test tasks
  double error = 0.0;                      // mean calibration error over context sizes
};

/// Meta-trains on n Vanilla GP-UCB traces of length T, then scores calibration
/// on fresh tasks conditioned on uniformly drawn context points, against the
/// true function on uniform evaluation points.
CalibrationStudyResult calibration_study(const Environment& env, Learner learner, int n_tasks, int task_size,
                                         std::uint64_t seed, const LearnerOptions& options = {},
                                         const CalibrationStudyOptions& study = {});

/// Columns level,frequency,coverage.
void write_calibration_csv(std::ostream& out, const CalibrationReport& report);

}  // namespace fpacoh
