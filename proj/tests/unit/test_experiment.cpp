// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fpacoh/experiment.hpp"
#include "json.hpp"

using namespace fpacoh;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny(const fs::path& root) {
  ExperimentConfig c;
  c.name = "unit";
  c.kind = ExperimentKind::kOfflineBo;
  c.env = "mixture_1d";
  c.learner = "vanilla";
  c.n = 2;
  c.T = 4;
  c.test_tasks = 2;
  c.seeds = {0, 1};
  c.workers = 2;
  c.output_dir = root.string();
  c.bo.acquisition.candidates = 200;
  return c;
}

}  // namespace

TEST_CASE("config json round trip and strict keys") {
  ExperimentConfig c;
  c.env = "camelback_sin";
  c.learner = "pacoh_map";
  c.seeds = {3, 4};
  c.learner_options.meta.kl_weight = 0.25;
  c.calibration.context_sizes = {2, 4, 6};
  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.learner_options.meta.kl_weight == 0.25);

  try {
    config_from_json(R"({"meta": {"lr": 0.1, "bogus": 1}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "meta.bogus");
  }
  try {
    config_from_json(R"({"n": "ten"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "n");
  }
  CHECK_THROWS_AS(config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"kind": "sweep"})"), ConfigError);
}

TEST_CASE("validation names the field") {
  ExperimentConfig c;
  c.learner = "gp";
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "learner");
  }
  c = ExperimentConfig{};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.learner = "random_search";
  c.kind = ExperimentKind::kCalibration;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("desk preset") {
  ExperimentConfig c;
  c.env = "mixture_1d";
  apply_desk_preset(c);
  CHECK(c.seeds.size() == 3);
  CHECK(c.n == 10);
  CHECK(c.T == 10);
  CHECK(c.learner_options.meta.iterations == 2000);
}

TEST_CASE("summaries") {
  const SeriesSummary s = summarize({3.0, 3.0, 3.0});
  CHECK(s.mean == 3.0);
  CHECK(s.ci95 == 0.0);
  const SeriesSummary t = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(t.mean == 2.5);
  CHECK(t.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(t.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(t.ci95 == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
  const SeriesSummary three = summarize({1.0, 2.0, 4.0});
  CHECK(three.ci95 == doctest::Approx(1.96 * std::sqrt(7.0 / 3.0) / std::sqrt(3.0)));
  const SeriesSummary one = summarize({7.0, std::nan("")});
  CHECK(one.count == 1);
  CHECK(std::isnan(one.ci95));
}

TEST_CASE("average rank selection") {
  CHECK(select_by_average_rank({{3.0, 1.0}, {1.0, 3.0}, {2.0, 2.0}}) == 0);
  CHECK(select_by_average_rank({{3.0, 3.0}, {1.0, 2.0}, {2.0, 1.0}}) == 1);
  CHECK(select_by_average_rank({{1.0, std::nan("")}, {2.0, 1.0}, {3.0, 2.0}}) == 1);
  CHECK_THROWS_AS(select_by_average_rank({}), EmptyData);
}

TEST_CASE("search space draws stay in range") {
  std::mt19937_64 rng(50);
  for (int i = 0; i < 200; ++i) {
    const MetaTrainConfig c = sample_search_config(rng, MetaTrainConfig{}, 3);
    CHECK(c.lr >= 1e-4);
    CHECK(c.lr <= 5e-3);
    CHECK(c.kl_weight >= 1e-4);
    CHECK(c.kl_weight <= 0.5);
    CHECK(c.hyperprior_lengthscale >= 0.1);
    CHECK(c.hyperprior_lengthscale <= 1.0);
    CHECK(c.task_batch <= 3);
    CHECK((c.feature_dim == 2 || c.feature_dim == 6));
  }
}

TEST_CASE("tune with an injected scorer") {
  ExperimentConfig c;
  c.learner = "fpacoh";
  const TuneResult one = tune(c, 1, 9, [](const MetaTrainConfig&, std::size_t) { return std::vector<double>{1.0, 1.0}; });
  CHECK(one.samples.size() == 1);
  CHECK(one.best_index == 0);
  CHECK(one.best.lr == one.samples[0].lr);

  const TuneResult many =
      tune(c, 16, 9, [](const MetaTrainConfig& m, std::size_t) { return std::vector<double>{m.lr, m.lr}; });
  for (const auto& s : many.samples) CHECK(many.best.lr <= s.lr);

  c.learner = "vanilla";
  CHECK_THROWS_AS(tune(c, 4, 9), ConfigError);
  c.learner = "fpacoh";
  CHECK_THROWS_AS(tune(c, 0, 9), ConfigError);
}

TEST_CASE("run, outputs, determinism and aggregation") {
  const fs::path root = fs::temp_directory_path() / "fpacoh_experiment_unit";
  fs::remove_all(root);
  ExperimentConfig c = tiny(root / "a");
  const RunManifest m = run_experiment(c);
  CHECK(m.all_ok());
  const fs::path seed0 = seed_directory(c, 0);
  CHECK(seed0 == root / "a" / "unit" / "mixture_1d" / "vanilla" / "seed0");
  for (const char* f : {"trace.csv", "metrics.json", "manifest.json"}) CHECK(fs::exists(seed0 / f));
  CHECK(fs::exists(fs::path(m.directory) / "run_manifest.json"));

  ExperimentConfig again = tiny(root / "b");
  again.workers = 1;
  run_experiment(again);
  for (std::uint64_t s : {0, 1}) {
    CHECK(slurp(fs::path(seed_directory(c, s)) / "trace.csv") ==
          slurp(fs::path(seed_directory(again, s)) / "trace.csv"));
  }

  const fs::path out = root / "summary";
  CHECK(aggregate({m.directory}, out.string()) == 2);
  const std::string csv = slurp(out / "summary.csv");
  CHECK(csv.rfind("run,t,metric,mean,std,stderr,ci95,count\n", 0) == 0);
  CHECK(csv.find("all,4,simple_regret,") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary["seed_directories"] == 2);
  CHECK(summary["metrics"]["final_simple_regret"]["count"] == 2);
  CHECK_THROWS_AS(aggregate({(root / "missing").string()}, out.string()), Error);
  fs::remove_all(root);
}

TEST_CASE("offline vanilla shape contract") {
  const fs::path root = fs::temp_directory_path() / "fpacoh_experiment_shape";
  fs::remove_all(root);
  ExperimentConfig c = tiny(root);
  c.env = "random_branin";
  c.n = 4;
  c.T = 5;
  c.test_tasks = 1;
  c.seeds = {0};
  REQUIRE(run_experiment(c).all_ok());
  std::istringstream in(slurp(fs::path(seed_directory(c, 0)) / "trace.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  fs::remove_all(root);
}

TEST_CASE("a failing seed is isolated and reported") {
  const fs::path root = fs::temp_directory_path() / "fpacoh_experiment_fail";
  fs::remove_all(root);
  ExperimentConfig c = tiny(root);
  c.kind = ExperimentKind::kSupervisedEval;
  c.n = 1;
  c.seeds = {0};
  const RunManifest m = run_experiment(c);
  CHECK_FALSE(m.all_ok());
  CHECK(m.seeds[0].error.find("n:") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(seed_directory(c, 0)) / "manifest.json"));
  CHECK(manifest["status"] == "failed");
  fs::remove_all(root);
}
