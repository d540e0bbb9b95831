// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fpacoh/environments.hpp"
#include "fpacoh/gp.hpp"
#include "fpacoh/gp_prior.hpp"
#include "fpacoh/meta_learners.hpp"
#include "fpacoh/se_gp.hpp"

namespace fpacoh {

/// A probabilistic model of one task, conditioned on raw observations and
/// predicting in raw output units.
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual std::string name() const = 0;
  /// Replaces the conditioning set.
  virtual void condition(const TaskDataset& data) = 0;
  /// Latent mean and variance at each row of `x`.
  virtual Marginals predict(const Matrix& x) const = 0;
  /// Observation noise variance in raw units.
  virtual double noise_var() const = 0;
  /// Random search ignores the model and queries uniformly.
  virtual bool is_random() const { return false; }
};

/// Meta-learned GP prior; observations are mapped through its standardizer.
class PriorSurrogate final : public Surrogate {
 public:
  PriorSurrogate(GpPrior prior, std::string name = "fpacoh");

  std::string name() const override { return name_; }
  void condition(const TaskDataset& data) override;
  Marginals predict(const Matrix& x) const override;
  double noise_var() const override;
  const GpPrior& prior() const { return *prior_; }

 private:
  std::unique_ptr<GpPrior> prior_;
  std::string name_;
  std::optional<ConditionedGp> posterior_;
};

/// Zero-mean SE GP. Inputs are standardized with `input_moments`, outputs
/// with the moments of the current observations; hyper-parameters are refit
/// on every call to condition() when enabled.
class VanillaSurrogate final : public Surrogate {
 public:
  VanillaSurrogate(Standardizer input_moments, bool fit_hypers = true, SeGpHypers init = {});

  std::string name() const override { return "vanilla"; }
  void condition(const TaskDataset& data) override;
  Marginals predict(const Matrix& x) const override;
  double noise_var() const override;
  const VanillaGp& gp() const { return *gp_; }
  const Standardizer& standardizer() const { return standardizer_; }

 private:
  Standardizer standardizer_;
  SeGpHypers init_;
  bool fit_hypers_;
  std::unique_ptr<VanillaGp> gp_;
  std::optional<ConditionedGp> posterior_;
};

/// Learned-GP baseline: constant-mean SE GP with meta-learned hyper-parameters.
class LearnedGpSurrogate final : public Surrogate {
 public:
  explicit LearnedGpSurrogate(LearnedGp model);

  std::string name() const override { return "learned_gp"; }
  void condition(const TaskDataset& data) override;
  Marginals predict(const Matrix& x) const override;
  double noise_var() const override;

 private:
  std::unique_ptr<VanillaGp> gp_;
  Standardizer standardizer_;
  std::optional<ConditionedGp> posterior_;
};

class RandomSearchSurrogate final : public Surrogate {
 public:
  explicit RandomSearchSurrogate(Eigen::Index dim) : dim_(dim) {}
  std::string name() const override { return "random_search"; }
  void condition(const TaskDataset&) override {}
  Marginals predict(const Matrix& x) const override;
  double noise_var() const override { return 0.0; }
  bool is_random() const override { return true; }

 private:
  Eigen::Index dim_;
};

/// mu + beta * sigma on the latent predictive.
Vector ucb(const Surrogate& model, const Matrix& x, double beta = 2.0);
double ucb(const Surrogate& model, const Vector& x, double beta = 2.0);

struct AcquisitionOptions {
  int candidates = 2000;
  int refine_steps = 50;
  double initial_step = 0.05;  // fraction of the box width
};

/// Maximizes a batched objective over the domain: exact argmax over finite
/// domains (ties to the lowest index); uniform candidates plus coordinate
/// refinement over boxes.
Vector maximize_acquisition(const std::function<Vector(const Matrix&)>& objective, const Domain& domain,
                            std::mt19937_64& rng, const AcquisitionOptions& options = {});

struct BoOptions {
  double beta = 2.0;
  AcquisitionOptions acquisition{};
};

struct BoStep {
  int t = 0;
  Vector x;
  double y = 0.0;
  Vector x_hat;         // maximizer of the predictive mean after observing y
  double f_x = 0.0;
  double f_x_hat = 0.0;  // NaN for random search
};

struct BoTrace {
  std::vector<BoStep> steps;
  double optimum = 0.0;
  double oracle_tolerance = 0.0;

  TaskDataset data() const;
};

struct RegretSeries {
  std::vector<double> simple;
  std::vector<double> inference;
};

/// Simple regret f* - max_{t'<=t} f(x_t') and inference regret f* - f(x_hat_t).
RegretSeries regret_metrics(const BoTrace& trace);

BoTrace bo_run(const Task& task, Surrogate& model, int steps, std::mt19937_64& rng, const BoOptions& options = {});

/// n tasks, each the trace of a T-step Vanilla GP-UCB run.
std::vector<TaskDataset> collect_meta_data(const Environment& env, int n_tasks, int task_size, std::uint64_t seed,
                                           Split split = Split::kMetaTrain, const BoOptions& options = {});

enum class Learner { kFpacoh, kPacohMap, kLearnedGp, kVanilla, kRandomSearch };

std::optional<Learner> parse_learner(const std::string& name);
std::string to_string(Learner learner);
std::vector<std::string> learner_names();

struct LearnerOptions {
  MetaTrainConfig meta{};
  double pacoh_hyperprior_variance = 10.0;
  LearnedGpConfig learned{};
};

/// Meta-trains (when the learner needs it) on `meta_data` and returns a fresh
/// surrogate. Throws what meta-training throws.
std::unique_ptr<Surrogate> make_surrogate(Learner learner, std::span<const TaskDataset> meta_data,
                                          const Environment& env, const LearnerOptions& options, std::uint64_t seed);

struct LifelongResult {
  std::vector<BoTrace> traces;
  std::vector<std::vector<double>> cumulative_inference;  // [run][t]
  std::vector<double> final_simple_regret;                // per run
  std::vector<std::string> log;
};

/// Sequential BO runs; run 0 uses the Vanilla GP and each later run meta-trains
/// on the traces of all previous runs. Failed meta-training falls back to the
/// Vanilla GP for that run. `bank` seeds the meta-dataset bank.
LifelongResult lifelong_bo(const Environment& env, int n_runs, int steps, Learner learner,
                           const LearnerOptions& options, std::uint64_t seed, const BoOptions& bo_options = {},
                           std::span<const TaskDataset> bank = {});

/// Columns run,t,x0..x{d-1},y,simple_regret,inference_regret,cumulative_inference_regret;
/// the cumulative column sums inference regret over all rows so far.
void write_trace_csv(std::ostream& out, std::span<const BoTrace> traces);

/// Shortest round-trip decimal form (NaN and infinities spelled out).
std::string format_double(double v);

}  // namespace fpacoh
