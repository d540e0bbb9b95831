// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fpacoh/domain.hpp"

namespace fpacoh {

/// One target function drawn from an environment, with its optimum.
class Task {
 public:
  virtual ~Task() = default;

  virtual double evaluate(const Vector& x) const = 0;
  virtual const Domain& domain() const = 0;
  /// f(x*) and x*, computed once when the task is created.
  virtual double optimum_value() const = 0;
  virtual const Vector& optimum_x() const = 0;
  /// Absolute accuracy of the optimum oracle.
  virtual double oracle_tolerance() const { return 1e-3; }
  /// Frozen parameter draw, for logging.
  virtual std::vector<std::pair<std::string, double>> parameters() const = 0;
};

enum class Split { kMetaTrain, kMetaTest };

/// Task distribution.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index dim() const = 0;
  /// Box used for uniform measurement points (the bounding box for finite domains).
  virtual Box measurement_box() const = 0;
  virtual std::shared_ptr<const Task> sample_task(std::mt19937_64& rng, Split split = Split::kMetaTrain) const = 0;
  /// Number of tasks n and evaluations per task T used by the benchmark protocol.
  virtual int default_num_tasks() const = 0;
  virtual int default_task_size() const = 0;
};

/// Maximizes f over a box: dense grid (<= 2D) or `starts` Sobol points (> 2D),
/// each followed by coordinate pattern search.
struct OptimumResult {
  Vector x;
  double value;
};
OptimumResult maximize_on_box(const std::function<double(const Vector&)>& f, const Box& box, int grid_per_dim = 400,
                              int sobol_starts = 512);

/// First n points of the Sobol sequence in [0,1)^dim (dim <= 6), skipping the origin.
Matrix sobol_sequence(int n, int dim);

// ---- Simulated families ----------------------------------------------------

struct MixtureParams {
  std::array<double, 3> w{1.0, 1.0, 1.0};
  std::array<double, 3> mu{-2.0, 3.0, -8.0};
};

class MixtureTask final : public Task {
 public:
  explicit MixtureTask(MixtureParams p);
  static double value(const MixtureParams& p, double x);

  double evaluate(const Vector& x) const override { return value(params_, x(0)); }
  const Domain& domain() const override { return domain_; }
  double optimum_value() const override { return opt_.value; }
  const Vector& optimum_x() const override { return opt_.x; }
  std::vector<std::pair<std::string, double>> parameters() const override;
  const MixtureParams& params() const { return params_; }

 private:
  MixtureParams params_;
  Domain domain_;
  OptimumResult opt_;
};

struct BraninParams {
  double a, b, c, r, s, t;
  static BraninParams canonical();
};

class BraninTask final : public Task {
 public:
  explicit BraninTask(BraninParams p);
  static double value(const BraninParams& p, const Vector& x);

  double evaluate(const Vector& x) const override { return value(params_, x); }
  const Domain& domain() const override { return domain_; }
  double optimum_value() const override { return opt_.value; }
  const Vector& optimum_x() const override { return opt_.x; }
  std::vector<std::pair<std::string, double>> parameters() const override;
  const BraninParams& params() const { return params_; }

 private:
  BraninParams params_;
  Domain domain_;
  OptimumResult opt_;
};

struct CamelbackParams {
  double a;
  std::array<double, 2> omega;
  std::array<double, 2> rho;
};

class CamelbackTask final : public Task {
 public:
  explicit CamelbackTask(CamelbackParams p);
  /// The clipped six-hump camelback term max(..., -2.5).
  static double clipped_camelback(const Vector& x);
  static double value(const CamelbackParams& p, const Vector& x);

  double evaluate(const Vector& x) const override { return value(params_, x); }
  const Domain& domain() const override { return domain_; }
  double optimum_value() const override { return opt_.value; }
  const Vector& optimum_x() const override { return opt_.x; }
  std::vector<std::pair<std::string, double>> parameters() const override;
  const CamelbackParams& params() const { return params_; }

 private:
  CamelbackParams params_;
  Domain domain_;
  OptimumResult opt_;
};

struct Hartmann6Params {
  std::array<double, 4> alpha{1.0, 1.2, 3.0, 3.2};
};

class Hartmann6Task final : public Task {
 public:
  static const std::array<std::array<double, 6>, 4> kA;
  static const std::array<std::array<double, 6>, 4> kP;
  static constexpr double kNormalizer = 3.322368;

  explicit Hartmann6Task(Hartmann6Params p);
  static double value(const Hartmann6Params& p, const Vector& x);

  double evaluate(const Vector& x) const override { return value(params_, x); }
  const Domain& domain() const override { return domain_; }
  double optimum_value() const override { return opt_.value; }
  const Vector& optimum_x() const override { return opt_.x; }
  std::vector<std::pair<std::string, double>> parameters() const override;
  const Hartmann6Params& params() const { return params_; }

 private:
  Hartmann6Params params_;
  Domain domain_;
  OptimumResult opt_;
};

MixtureParams sample_mixture_params(std::mt19937_64& rng);
BraninParams sample_branin_params(std::mt19937_64& rng);
CamelbackParams sample_camelback_params(std::mt19937_64& rng);
Hartmann6Params sample_hartmann6_params(std::mt19937_64& rng);

std::shared_ptr<const Task> sample_mixture_task(std::mt19937_64& rng);
std::shared_ptr<const Task> sample_branin_task(std::mt19937_64& rng);
std::shared_ptr<const Task> sample_camelback_task(std::mt19937_64& rng);
std::shared_ptr<const Task> sample_hartmann6_task(std::mt19937_64& rng);

/// Registry options; `hpo_dir` holds `<algorithm>/<dataset_id>.csv` tables.
struct EnvironmentOptions {
  std::string hpo_dir;
};

/// Names accepted by make_environment.
std::vector<std::string> environment_names();

/// Throws ConfigError for unknown names.
std::unique_ptr<Environment> make_environment(const std::string& name, const EnvironmentOptions& options = {});

}  // namespace fpacoh
