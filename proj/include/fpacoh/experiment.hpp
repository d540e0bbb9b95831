// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fpacoh/bo.hpp"
#include "fpacoh/metrics.hpp"

namespace fpacoh {

enum class ExperimentKind { kCalibration, kOfflineBo, kLifelongBo, kSupervisedEval };

std::string to_string(ExperimentKind kind);
/// Throws ConfigError("kind", ...) for unknown names.
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentConfig {
  std::string name = "default";
  ExperimentKind kind = ExperimentKind::kOfflineBo;
  std::string env = "random_branin";
  std::string learner = "fpacoh";
  int n = 0;             // meta-training tasks; 0 uses the environment default
  int T = 0;             // points per meta-training task; 0 uses the environment default
  int bo_steps = 0;      // offline BO steps per test task; 0 uses T
  int test_tasks = 10;   // offline BO test tasks per seed
  int runs = 10;         // lifelong BO runs
  std::vector<std::uint64_t> seeds{0};
  int workers = 1;
  std::string output_dir = "out";
  std::string hpo_dir;
  LearnerOptions learner_options{};
  CalibrationStudyOptions calibration{};
  BoOptions bo{};

  /// Throws ConfigError naming the offending field.
  void validate() const;
  int resolved_n(const Environment& env) const;
  int resolved_T(const Environment& env) const;
};

/// Parses a JSON config; unknown keys and wrong types raise ConfigError with
/// the key path.
ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base = {});
std::string config_to_json(const ExperimentConfig& config);

/// Desk-scale sizes: 3 seeds, n=10, T=20 (mixture: T=10), 5 test tasks,
/// 2000 meta-training iterations, 5 lifelong runs.
void apply_desk_preset(ExperimentConfig& config);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string directory;
  std::vector<std::string> files;
  double seconds = 0.0;
};

struct RunManifest {
  std::string config_json;
  std::string version;
  std::string directory;
  std::vector<SeedOutcome> seeds;

  bool all_ok() const;
};

/// Output directory of one seed: <output_dir>/<name>/<env>/<learner>/seed<k>.
std::string seed_directory(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every seed (in parallel up to `workers`), isolating per-seed failures.
RunManifest run_experiment(const ExperimentConfig& config);

/// Mean, spread and normal-approximation 95% interval of one sample.
struct SeriesSummary {
  double mean = 0.0;
  double std = 0.0;     // sample standard deviation; NaN for one value
  double stderr_ = 0.0;  // NaN for one value
  double ci95 = 0.0;    // 1.96 * stderr; NaN for one value
  std::size_t count = 0;
};
SeriesSummary summarize(const std::vector<double>& values);

/// Reads the seed directories under each path (a seed directory or any parent)
/// and writes `summary.csv` (per-timestep regret series) and `summary.json`
/// (scalar metrics) into `out_dir`. Returns the number of seed directories read.
std::size_t aggregate(const std::vector<std::string>& paths, const std::string& out_dir);

/// Log-uniform / choice draw over the meta-training search space.
MetaTrainConfig sample_search_config(std::mt19937_64& rng, const MetaTrainConfig& base, int n_tasks);

/// Index with the best average rank over the score columns (lower is better,
/// ties share the mean rank, final ties go to the lowest index).
std::size_t select_by_average_rank(const std::vector<std::vector<double>>& scores);

struct TuneResult {
  MetaTrainConfig best;
  std::size_t best_index = 0;
  std::vector<MetaTrainConfig> samples;
  std::vector<std::vector<double>> scores;  // [sample][last simple regret, late inference regret]
};

/// Random search over the search space with `budget` samples, scored on three
/// validation tasks. `evaluate` overrides the scoring (for tests).
using TuneScorer = std::function<std::vector<double>(const MetaTrainConfig&, std::size_t index)>;
TuneResult tune(const ExperimentConfig& config, int budget, std::uint64_t seed, const TuneScorer& evaluate = {});

}  // namespace fpacoh
