// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fpacoh/errors.hpp"
#include "fpacoh/experiment.hpp"
#include "json.hpp"

namespace {

using fpacoh::ExperimentConfig;

constexpr const char* kOutputEnv = "FPACOH_OUT";

struct ConfigFlags {
  std::string config_file;
  std::string preset;
  std::string name, kind, env, learner, output, hpo_dir;
  std::optional<int> n, T, bo_steps, test_tasks, runs, workers, iterations, task_batch, feature_dim;
  std::optional<double> lr, kl_weight, hyperprior_lengthscale, weight_decay, lr_decay;
  std::vector<std::uint64_t> seeds;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON config file (flags override it)")->check(CLI::ExistingFile);
    app->add_option("--preset", preset, "Size preset")->check(CLI::IsMember({"desk"}));
    app->add_option("--name", name, "Experiment name (first path segment under the output root)");
    app->add_option("--kind", kind, "calibration | offline_bo | lifelong_bo | supervised_eval");
    app->add_option("--env", env, "Environment name (see list-envs)");
    app->add_option("--learner", learner, "fpacoh | pacoh_map | learned_gp | vanilla | random_search");
    app->add_option("--n", n, "Meta-training tasks (0: environment default)");
    app->add_option("--T", T, "Points per meta-training task (0: environment default)");
    app->add_option("--bo-steps", bo_steps, "BO steps per offline test task (0: T)");
    app->add_option("--test-tasks", test_tasks, "Offline BO test tasks per seed");
    app->add_option("--runs", runs, "Lifelong BO runs");
    app->add_option("--seeds", seeds, "Master seeds")->delimiter(',');
    app->add_option("--workers", workers, "Parallel seed workers");
    app->add_option("--iterations", iterations, "Meta-training iterations");
    app->add_option("--task-batch", task_batch, "Meta-training task batch size");
    app->add_option("--feature-dim", feature_dim, "Kernel feature dimension (0: automatic)");
    app->add_option("--lr", lr, "Meta-training learning rate");
    app->add_option("--lr-decay", lr_decay, "Learning rate decay per 1000 steps");
    app->add_option("--weight-decay", weight_decay, "AdamW weight decay");
    app->add_option("--kl-weight", kl_weight, "Functional KL weight kappa");
    app->add_option("--hyperprior-lengthscale", hyperprior_lengthscale, "Hyper-prior lengthscale");
    app->add_option("--output", output, std::string("Output root (default: $") + kOutputEnv + " or ./out)");
    app->add_option("--hpo-dir", hpo_dir, "Directory with <algorithm>/<dataset_id>.csv lookup tables");
  }

  ExperimentConfig build() const {
    ExperimentConfig c;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      c = fpacoh::config_from_json(ss.str());
    }
    if (const char* root = std::getenv(kOutputEnv); root != nullptr && *root != '\0') c.output_dir = root;
    if (!name.empty()) c.name = name;
    if (!kind.empty()) c.kind = fpacoh::parse_experiment_kind(kind);
    if (!env.empty()) c.env = env;
    if (!learner.empty()) c.learner = learner;
    if (preset == "desk") fpacoh::apply_desk_preset(c);
    if (n) c.n = *n;
    if (T) c.T = *T;
    if (bo_steps) c.bo_steps = *bo_steps;
    if (test_tasks) c.test_tasks = *test_tasks;
    if (runs) c.runs = *runs;
    if (!seeds.empty()) c.seeds = seeds;
    if (workers) c.workers = *workers;
    auto& m = c.learner_options.meta;
    if (iterations) m.iterations = *iterations;
    if (task_batch) m.task_batch = *task_batch;
    if (feature_dim) m.feature_dim = *feature_dim;
    if (lr) m.lr = *lr;
    if (lr_decay) m.lr_decay = *lr_decay;
    if (weight_decay) m.weight_decay = *weight_decay;
    if (kl_weight) m.kl_weight = *kl_weight;
    if (hyperprior_lengthscale) m.hyperprior_lengthscale = *hyperprior_lengthscale;
    if (!output.empty()) c.output_dir = output;
    if (!hpo_dir.empty()) c.hpo_dir = hpo_dir;
    return c;
  }
};

int cmd_run(const ConfigFlags& flags) {
  const ExperimentConfig config = flags.build();
  const auto manifest = fpacoh::run_experiment(config);
  for (const auto& s : manifest.seeds) {
    std::cout << "seed " << s.seed << ": " << (s.ok ? "ok" : "FAILED") << "  " << s.directory;
    if (!s.ok) std::cout << "  (" << s.error << ")";
    std::cout << '\n';
  }
  return manifest.all_ok() ? 0 : 1;
}

int cmd_tune(const ConfigFlags& flags, int budget, std::uint64_t seed, const std::string& out) {
  const ExperimentConfig config = flags.build();
  const auto result = fpacoh::tune(config, budget, seed);
  ExperimentConfig best = config;
  best.learner_options.meta = result.best;
  const std::string text = fpacoh::config_to_json(best);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(out);
    f << text << '\n';
    std::cout << "best sample " << result.best_index << " of " << result.samples.size() << " written to " << out
              << '\n';
  }
  return 0;
}

int cmd_list_envs() {
  for (const auto& name : fpacoh::environment_names()) {
    std::cout << name;
    try {
      const auto env = fpacoh::make_environment(name);
      std::cout << "  dim=" << env->dim() << " n=" << env->default_num_tasks() << " T=" << env->default_task_size();
    } catch (const fpacoh::ConfigError&) {
      std::cout << "  (lookup table; needs --hpo-dir)";
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned GP priors for Bayesian optimization"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "Run an experiment for every seed");
  run_flags.attach(run);

  std::vector<std::string> agg_paths;
  std::string agg_out;
  auto* agg = app.add_subcommand("aggregate", "Summarize seed directories (mean, std, stderr, 95% CI)");
  agg->add_option("paths", agg_paths, "Seed directories or their parents")->required();
  agg->add_option("-o,--out", agg_out, "Directory for summary.csv and summary.json")->required();

  ConfigFlags tune_flags;
  int budget = 128;
  std::uint64_t tune_seed = 0;
  std::string tune_out;
  auto* tune = app.add_subcommand("tune", "Random search over the meta-training hyper-parameters");
  tune_flags.attach(tune);
  tune->add_option("--budget", budget, "Number of sampled configurations");
  tune->add_option("--tune-seed", tune_seed, "Seed of the search");
  tune->add_option("--out", tune_out, "Write the best config here instead of stdout");

  auto* list = app.add_subcommand("list-envs", "List environment names");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (agg->parsed()) {
      const auto n = fpacoh::aggregate(agg_paths, agg_out);
      std::cout << "aggregated " << n << " seed directories into " << agg_out << '\n';
      return 0;
    }
    if (tune->parsed()) return cmd_tune(tune_flags, budget, tune_seed, tune_out);
    if (list->parsed()) return cmd_list_envs();
  } catch (const fpacoh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
