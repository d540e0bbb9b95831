// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "fpacoh/errors.hpp"
#include "fpacoh/rng.hpp"
#include "json.hpp"

#ifndef FPACOH_VERSION
#define FPACOH_VERSION "unknown"
#endif

namespace fpacoh {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- JSON config helpers ---------------------------------------------------------

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path, "wrong type");
  }
}

void check_keys(const json& j, const std::string& prefix, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, const std::string& prefix, T& out) {
  if (!j.contains(key)) return;
  out = get_as<T>(j.at(key), prefix.empty() ? key : prefix + "." + key);
}

json meta_to_json(const MetaTrainConfig& m) {
  return {{"lr", m.lr},
          {"lr_decay", m.lr_decay},
          {"weight_decay", m.weight_decay},
          {"task_batch", m.task_batch},
          {"iterations", m.iterations},
          {"hyperprior_lengthscale", m.hyperprior_lengthscale},
          {"hyperprior_outputscale", m.hyperprior_outputscale},
          {"kl_weight", m.kl_weight},
          {"feature_dim", m.feature_dim},
          {"hidden_layers", m.hidden_layers},
          {"hidden_width", m.hidden_width},
          {"measurement_task_points", m.measurement_task_points},
          {"measurement_uniform_points", m.measurement_uniform_points}};
}

void meta_from_json(const json& j, MetaTrainConfig& m) {
  check_keys(j, "meta",
             {"lr", "lr_decay", "weight_decay", "task_batch", "iterations", "hyperprior_lengthscale",
              "hyperprior_outputscale", "kl_weight", "feature_dim", "hidden_layers", "hidden_width",
              "measurement_task_points", "measurement_uniform_points"});
  read_field(j, "lr", "meta", m.lr);
  read_field(j, "lr_decay", "meta", m.lr_decay);
  read_field(j, "weight_decay", "meta", m.weight_decay);
  read_field(j, "task_batch", "meta", m.task_batch);
  read_field(j, "iterations", "meta", m.iterations);
  read_field(j, "hyperprior_lengthscale", "meta", m.hyperprior_lengthscale);
  read_field(j, "hyperprior_outputscale", "meta", m.hyperprior_outputscale);
  read_field(j, "kl_weight", "meta", m.kl_weight);
  read_field(j, "feature_dim", "meta", m.feature_dim);
  read_field(j, "hidden_layers", "meta", m.hidden_layers);
  read_field(j, "hidden_width", "meta", m.hidden_width);
  read_field(j, "measurement_task_points", "meta", m.measurement_task_points);
  read_field(j, "measurement_uniform_points", "meta", m.measurement_uniform_points);
}

// ---- Output helpers --------------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string trace_csv(std::span<const BoTrace> traces) {
  std::ostringstream ss;
  write_trace_csv(ss, traces);
  return ss.str();
}

std::string calibration_csv(const CalibrationReport& r) {
  std::ostringstream ss;
  write_calibration_csv(ss, r);
  return ss.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t k = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++k;
  }
  return k == 0 ? kNaN : s / static_cast<double>(k);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Mean inference regret over the last `window` steps.
double late_inference(const RegretSeries& r, std::size_t window) {
  const std::size_t n = r.inference.size();
  const std::size_t start = n > window ? n - window : 0;
  return mean_of(std::vector<double>(r.inference.begin() + static_cast<std::ptrdiff_t>(start), r.inference.end()));
}

Learner learner_of(const ExperimentConfig& c) { return *parse_learner(c.learner); }

// ---- One seed ----------------------------------------------------------------------

json run_offline(const ExperimentConfig& c, const Environment& env, std::uint64_t seed, const fs::path& dir,
                 std::vector<std::string>& files) {
  const Learner learner = learner_of(c);
  const int n = c.resolved_n(env);
  const int t = c.resolved_T(env);
  const int steps = c.bo_steps > 0 ? c.bo_steps : t;
  std::vector<TaskDataset> meta_data;
  if (learner != Learner::kVanilla && learner != Learner::kRandomSearch) {
    meta_data = collect_meta_data(env, n, t, derive_seed(seed, {10}), Split::kMetaTrain, c.bo);
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto model = make_surrogate(learner, meta_data, env, c.learner_options, derive_seed(seed, {11}));
  const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<BoTrace> traces;
  std::vector<double> final_simple;
  std::vector<double> late;
  for (int j = 0; j < c.test_tasks; ++j) {
    const auto idx = static_cast<std::uint64_t>(j);
    auto task_rng = make_rng(seed, {12, idx});
    const auto task = env.sample_task(task_rng, Split::kMetaTest);
    auto bo_rng = make_rng(seed, {13, idx});
    traces.push_back(bo_run(*task, *model, steps, bo_rng, c.bo));
    const RegretSeries r = regret_metrics(traces.back());
    final_simple.push_back(r.simple.back());
    late.push_back(late_inference(r, 50));
  }
  write_text(dir / "trace.csv", trace_csv(traces));
  files.push_back("trace.csv");
  return {{"final_simple_regret", median_of(final_simple)},
          {"mean_final_simple_regret", mean_of(final_simple)},
          {"late_inference_regret", mean_of(late)},
          {"per_task_final_simple_regret", final_simple},
          {"meta_training_seconds", train_seconds}};
}

json run_lifelong(const ExperimentConfig& c, const Environment& env, std::uint64_t seed, const fs::path& dir,
                  std::vector<std::string>& files) {
  const LifelongResult r =
      lifelong_bo(env, c.runs, c.resolved_T(env), learner_of(c), c.learner_options, seed, c.bo);
  write_text(dir / "trace.csv", trace_csv(r.traces));
  files.push_back("trace.csv");
  return {{"cumulative_inference_regret", r.cumulative_inference.back().back()},
          {"final_simple_regret", r.final_simple_regret.back()},
          {"first_run_simple_regret", r.final_simple_regret.front()},
          {"per_run_final_simple_regret", r.final_simple_regret},
          {"log", r.log}};
}

json run_calibration(const ExperimentConfig& c, const Environment& env, std::uint64_t seed, const fs::path& dir,
                     std::vector<std::string>& files) {
  const CalibrationStudyResult r = calibration_study(env, learner_of(c), c.resolved_n(env), c.resolved_T(env), seed,
                                                     c.learner_options, c.calibration);
  json per = json::array();
  for (std::size_t k = 0; k < r.reports.size(); ++k) {
    const std::string name = "calibration_ctx" + std::to_string(r.context_sizes[k]) + ".csv";
    write_text(dir / name, calibration_csv(r.reports[k]));
    files.push_back(name);
    per.push_back({{"context_size", r.context_sizes[k]}, {"calibration_error", r.reports[k].error}});
  }
  return {{"calibration_error", r.error}, {"per_context", per}};
}

json run_supervised(const ExperimentConfig& c, const Environment& env, std::uint64_t seed, const fs::path& dir,
                    std::vector<std::string>& files) {
  const SupervisedResult r =
      supervised_eval(env, learner_of(c), c.resolved_n(env), c.resolved_T(env), seed, c.learner_options);
  write_text(dir / "calibration.csv", calibration_csv(r.pooled));
  files.push_back("calibration.csv");
  return {{"log_likelihood", r.log_likelihood},
          {"calibration_error", r.calibration_error},
          {"pooled_calibration_error", r.pooled.error},
          {"per_task_log_likelihood", r.task_log_likelihood},
          {"per_task_calibration_error", r.task_calibration_error}};
}

SeedOutcome run_seed(const ExperimentConfig& c, const Environment& env, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  const fs::path dir = seed_directory(c, seed);
  out.directory = dir.string();
  const auto t0 = std::chrono::steady_clock::now();
  json metrics;
  try {
    fs::create_directories(dir);
    switch (c.kind) {
      case ExperimentKind::kOfflineBo:
        metrics = run_offline(c, env, seed, dir, out.files);
        break;
      case ExperimentKind::kLifelongBo:
        metrics = run_lifelong(c, env, seed, dir, out.files);
        break;
      case ExperimentKind::kCalibration:
        metrics = run_calibration(c, env, seed, dir, out.files);
        break;
      case ExperimentKind::kSupervisedEval:
        metrics = run_supervised(c, env, seed, dir, out.files);
        break;
    }
    write_text(dir / "metrics.json", metrics.dump(1) + "\n");
    out.files.push_back("metrics.json");
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    fs::create_directories(dir);
    json manifest = {{"version", FPACOH_VERSION},
                     {"kind", to_string(c.kind)},
                     {"seed", seed},
                     {"status", out.ok ? "ok" : "failed"},
                     {"error", out.error},
                     {"files", out.files},
                     {"seconds", out.seconds},
                     {"config", json::parse(config_to_json(c))}};
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
    out.files.push_back("manifest.json");
  } catch (const std::exception& e) {
    out.ok = false;
    if (out.error.empty()) out.error = e.what();
  }
  return out;
}

// ---- Aggregation -------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

double to_double(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

json summary_json(const SeriesSummary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"stderr", s.stderr_}, {"ci95", s.ci95}, {"count", s.count}};
}

void collect_seed_dirs(const fs::path& p, std::vector<fs::path>& out) {
  if (!fs::exists(p)) throw Error("no such path: '" + p.string() + "'");
  if (fs::is_directory(p) && fs::exists(p / "manifest.json")) {
    out.push_back(p);
    return;
  }
  if (!fs::is_directory(p)) return;
  for (const auto& e : fs::recursive_directory_iterator(p)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) out.push_back(e.path());
  }
}

}  // namespace

// ---- Public API ----------------------------------------------------------------------

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kCalibration:
      return "calibration";
    case ExperimentKind::kOfflineBo:
      return "offline_bo";
    case ExperimentKind::kLifelongBo:
      return "lifelong_bo";
    case ExperimentKind::kSupervisedEval:
      return "supervised_eval";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::kCalibration, ExperimentKind::kOfflineBo, ExperimentKind::kLifelongBo,
                 ExperimentKind::kSupervisedEval}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("kind", "unknown experiment kind '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("name", "must be a non-empty path segment");
  const auto envs = environment_names();
  if (std::find(envs.begin(), envs.end(), env) == envs.end()) {
    throw ConfigError("env", "unknown environment '" + env + "'");
  }
  const auto l = parse_learner(learner);
  if (!l) throw ConfigError("learner", "unknown learner '" + learner + "'");
  if (*l == Learner::kRandomSearch && kind != ExperimentKind::kOfflineBo) {
    throw ConfigError("learner", "random_search only supports offline_bo");
  }
  if (n < 0) throw ConfigError("n", "must be >= 0");
  if (T < 0) throw ConfigError("T", "must be >= 0");
  if (bo_steps < 0) throw ConfigError("bo_steps", "must be >= 0");
  if (test_tasks < 1) throw ConfigError("test_tasks", "must be >= 1");
  if (runs < 1) throw ConfigError("runs", "must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  if (calibration.test_tasks < 1) throw ConfigError("calibration.test_tasks", "must be >= 1");
  if (calibration.eval_points < 1) throw ConfigError("calibration.eval_points", "must be >= 1");
  for (int s : calibration.context_sizes) {
    if (s < 1) throw ConfigError("calibration.context_sizes", "entries must be >= 1");
  }
  if (!(learner_options.pacoh_hyperprior_variance > 0.0)) {
    throw ConfigError("pacoh_hyperprior_variance", "must be positive");
  }
  learner_options.meta.validate();
}

int ExperimentConfig::resolved_n(const Environment& e) const { return n > 0 ? n : e.default_num_tasks(); }
int ExperimentConfig::resolved_T(const Environment& e) const { return T > 0 ? T : e.default_task_size(); }

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "",
             {"name", "kind", "env", "learner", "n", "T", "bo_steps", "test_tasks", "runs", "seeds", "workers",
              "output_dir", "hpo_dir", "meta", "pacoh_hyperprior_variance", "learned_gp", "calibration", "bo"});
  read_field(j, "name", "", c.name);
  if (j.contains("kind")) c.kind = parse_experiment_kind(get_as<std::string>(j.at("kind"), "kind"));
  read_field(j, "env", "", c.env);
  read_field(j, "learner", "", c.learner);
  read_field(j, "n", "", c.n);
  read_field(j, "T", "", c.T);
  read_field(j, "bo_steps", "", c.bo_steps);
  read_field(j, "test_tasks", "", c.test_tasks);
  read_field(j, "runs", "", c.runs);
  read_field(j, "seeds", "", c.seeds);
  read_field(j, "workers", "", c.workers);
  read_field(j, "output_dir", "", c.output_dir);
  read_field(j, "hpo_dir", "", c.hpo_dir);
  read_field(j, "pacoh_hyperprior_variance", "", c.learner_options.pacoh_hyperprior_variance);
  if (j.contains("meta")) meta_from_json(j.at("meta"), c.learner_options.meta);
  if (j.contains("learned_gp")) {
    const auto& lj = j.at("learned_gp");
    check_keys(lj, "learned_gp", {"iterations", "lr"});
    read_field(lj, "iterations", "learned_gp", c.learner_options.learned.iterations);
    read_field(lj, "lr", "learned_gp", c.learner_options.learned.lr);
  }
  if (j.contains("calibration")) {
    const auto& cj = j.at("calibration");
    check_keys(cj, "calibration", {"context_sizes", "test_tasks", "eval_points"});
    read_field(cj, "context_sizes", "calibration", c.calibration.context_sizes);
    read_field(cj, "test_tasks", "calibration", c.calibration.test_tasks);
    read_field(cj, "eval_points", "calibration", c.calibration.eval_points);
  }
  if (j.contains("bo")) {
    const auto& bj = j.at("bo");
    check_keys(bj, "bo", {"beta", "candidates", "refine_steps", "initial_step"});
    read_field(bj, "beta", "bo", c.bo.beta);
    read_field(bj, "candidates", "bo", c.bo.acquisition.candidates);
    read_field(bj, "refine_steps", "bo", c.bo.acquisition.refine_steps);
    read_field(bj, "initial_step", "bo", c.bo.acquisition.initial_step);
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j = {{"name", c.name},
            {"kind", to_string(c.kind)},
            {"env", c.env},
            {"learner", c.learner},
            {"n", c.n},
            {"T", c.T},
            {"bo_steps", c.bo_steps},
            {"test_tasks", c.test_tasks},
            {"runs", c.runs},
            {"seeds", c.seeds},
            {"workers", c.workers},
            {"output_dir", c.output_dir},
            {"hpo_dir", c.hpo_dir},
            {"meta", meta_to_json(c.learner_options.meta)},
            {"pacoh_hyperprior_variance", c.learner_options.pacoh_hyperprior_variance},
            {"learned_gp", {{"iterations", c.learner_options.learned.iterations}, {"lr", c.learner_options.learned.lr}}},
            {"calibration",
             {{"context_sizes", c.calibration.context_sizes},
              {"test_tasks", c.calibration.test_tasks},
              {"eval_points", c.calibration.eval_points}}},
            {"bo",
             {{"beta", c.bo.beta},
              {"candidates", c.bo.acquisition.candidates},
              {"refine_steps", c.bo.acquisition.refine_steps},
              {"initial_step", c.bo.acquisition.initial_step}}}};
  return j.dump(1);
}

void apply_desk_preset(ExperimentConfig& c) {
  c.seeds = {0, 1, 2};
  c.n = 10;
  c.T = c.env == "mixture_1d" ? 10 : 20;
  c.test_tasks = 5;
  c.runs = 5;
  c.learner_options.meta.iterations = 2000;
}

bool RunManifest::all_ok() const {
  return !seeds.empty() && std::all_of(seeds.begin(), seeds.end(), [](const SeedOutcome& s) { return s.ok; });
}

std::string seed_directory(const ExperimentConfig& c, std::uint64_t seed) {
  return (fs::path(c.output_dir) / c.name / c.env / c.learner / ("seed" + std::to_string(seed))).string();
}

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto env = make_environment(config.env, EnvironmentOptions{config.hpo_dir});

  RunManifest manifest;
  manifest.config_json = config_to_json(config);
  manifest.version = FPACOH_VERSION;
  manifest.directory = (fs::path(config.output_dir) / config.name / config.env / config.learner).string();
  manifest.seeds.resize(config.seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      manifest.seeds[k] = run_seed(config, *env, config.seeds[k]);
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), config.seeds.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  json seeds = json::array();
  for (const auto& s : manifest.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"status", s.ok ? "ok" : "failed"},
                     {"error", s.error},
                     {"directory", s.directory},
                     {"files", s.files},
                     {"seconds", s.seconds}});
  }
  const json top = {{"version", manifest.version},
                    {"config", json::parse(manifest.config_json)},
                    {"seeds", seeds},
                    {"all_ok", manifest.all_ok()}};
  fs::create_directories(manifest.directory);
  write_text(fs::path(manifest.directory) / "run_manifest.json", top.dump(1) + "\n");
  return manifest;
}

SeriesSummary summarize(const std::vector<double>& values) {
  SeriesSummary s;
  std::vector<double> v;
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  s.count = v.size();
  if (v.empty()) {
    s.mean = s.std = s.stderr_ = s.ci95 = kNaN;
    return s;
  }
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) {
    s.std = s.stderr_ = s.ci95 = kNaN;
    return s;
  }
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(v.size() - 1));
  s.stderr_ = s.std / std::sqrt(static_cast<double>(v.size()));
  s.ci95 = 1.96 * s.stderr_;
  return s;
}

std::size_t aggregate(const std::vector<std::string>& paths, const std::string& out_dir) {
  std::vector<fs::path> dirs;
  for (const auto& p : paths) collect_seed_dirs(p, dirs);
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
  if (dirs.empty()) throw EmptyData("aggregate: no seed directories found");

  const std::vector<std::string> series{"simple_regret", "inference_regret", "cumulative_inference_regret"};
  // key: (run label, t) -> metric -> values
  std::map<std::pair<long, long>, std::map<std::string, std::vector<double>>> grouped;
  std::map<std::string, std::vector<double>> scalars;

  for (const auto& dir : dirs) {
    std::ifstream mf(dir / "manifest.json");
    const json manifest = json::parse(mf, nullptr, false);
    if (manifest.is_discarded() || manifest.value("status", "") != "ok") continue;
    const bool lifelong = manifest.value("kind", "") == "lifelong_bo";
    if (fs::exists(dir / "trace.csv")) {
      const CsvTable t = read_csv(dir / "trace.csv");
      const auto c_run = t.column("run");
      const auto c_t = t.column("t");
      if (c_run < 0 || c_t < 0) throw SchemaError(dir.string() + "/trace.csv: missing run or t column");
      for (const auto& row : t.rows) {
        const long run = lifelong ? std::stol(row[static_cast<std::size_t>(c_run)]) : -1;
        const long step = std::stol(row[static_cast<std::size_t>(c_t)]);
        for (const auto& m : series) {
          const auto c = t.column(m);
          if (c >= 0) grouped[{run, step}][m].push_back(to_double(row[static_cast<std::size_t>(c)]));
        }
      }
    }
    if (fs::exists(dir / "metrics.json")) {
      std::ifstream in(dir / "metrics.json");
      const json metrics = json::parse(in, nullptr, false);
      if (!metrics.is_discarded()) {
        for (const auto& [key, value] : metrics.items()) {
          if (value.is_number()) scalars[key].push_back(value.get<double>());
          if (value.is_null()) scalars[key].push_back(kNaN);
        }
      }
    }
  }

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "run,t,metric,mean,std,stderr,ci95,count\n";
  for (const auto& [key, metrics] : grouped) {
    for (const auto& m : series) {
      const auto it = metrics.find(m);
      if (it == metrics.end()) continue;
      const SeriesSummary s = summarize(it->second);
      csv << (key.first < 0 ? std::string("all") : std::to_string(key.first)) << ',' << key.second << ',' << m << ','
          << format_double(s.mean) << ',' << format_double(s.std) << ',' << format_double(s.stderr_) << ','
          << format_double(s.ci95) << ',' << s.count << '\n';
    }
  }
  write_text(fs::path(out_dir) / "summary.csv", csv.str());

  json summary = {{"seed_directories", dirs.size()}};
  json metrics = json::object();
  for (const auto& [key, values] : scalars) metrics[key] = summary_json(summarize(values));
  summary["metrics"] = metrics;
  write_text(fs::path(out_dir) / "summary.json", summary.dump(1) + "\n");
  return dirs.size();
}

MetaTrainConfig sample_search_config(std::mt19937_64& rng, const MetaTrainConfig& base, int n_tasks) {
  auto log_uniform = [&rng](double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
  };
  auto choice = [&rng](std::initializer_list<int> options) {
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    return *(options.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
  };
  MetaTrainConfig c = base;
  c.lr = log_uniform(1e-4, 5e-3);
  c.lr_decay = log_uniform(0.8, 1.0);
  c.weight_decay = log_uniform(1e-5, 0.1);
  c.task_batch = std::min(choice({4, 10}), std::max(1, n_tasks));
  c.iterations = choice({2000, 4000, 8000});
  c.hyperprior_lengthscale = log_uniform(0.1, 1.0);
  c.kl_weight = log_uniform(1e-4, 0.5);
  c.feature_dim = choice({2, 6});
  return c;
}

std::size_t select_by_average_rank(const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) throw EmptyData("select_by_average_rank: no candidates");
  const std::size_t n = scores.size();
  const std::size_t m = scores.front().size();
  std::vector<double> avg(n, 0.0);
  for (std::size_t col = 0; col < m; ++col) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = scores[i].at(col);
      v[i] = std::isnan(s) ? std::numeric_limits<double>::infinity() : s;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) avg[order[k]] += rank / static_cast<double>(m);
      i = j + 1;
    }
  }
  return static_cast<std::size_t>(std::min_element(avg.begin(), avg.end()) - avg.begin());
}

TuneResult tune(const ExperimentConfig& config, int budget, std::uint64_t seed, const TuneScorer& evaluate) {
  if (budget < 1) throw ConfigError("budget", "must be >= 1");
  config.validate();
  const Learner learner = learner_of(config);
  if (learner != Learner::kFpacoh && learner != Learner::kPacohMap) {
    throw ConfigError("learner", "tune supports fpacoh and pacoh_map");
  }
  TuneResult result;
  int n_tasks = config.n > 0 ? config.n : 20;

  std::unique_ptr<Environment> env;
  std::vector<TaskDataset> meta_data;
  std::vector<std::shared_ptr<const Task>> validation;
  int steps = 0;
  TuneScorer scorer = evaluate;
  if (!scorer) {
    env = make_environment(config.env, EnvironmentOptions{config.hpo_dir});
    const int n = config.resolved_n(*env);
    const int t = config.resolved_T(*env);
    n_tasks = n;
    steps = config.bo_steps > 0 ? config.bo_steps : t;
    meta_data = collect_meta_data(*env, n, t, derive_seed(seed, {20}), Split::kMetaTrain, config.bo);
    for (std::uint64_t j = 0; j < 3; ++j) {
      auto rng = make_rng(seed, {21, j});
      validation.push_back(env->sample_task(rng, Split::kMetaTrain));
    }
    scorer = [&](const MetaTrainConfig& meta, std::size_t index) -> std::vector<double> {
      LearnerOptions opts = config.learner_options;
      opts.meta = meta;
      std::unique_ptr<Surrogate> model;
      try {
        model = make_surrogate(learner, meta_data, *env, opts, derive_seed(seed, {24, index}));
      } catch (const Error&) {
        return {kNaN, kNaN};
      }
      std::vector<double> last;
      std::vector<double> late;
      for (std::size_t j = 0; j < validation.size(); ++j) {
        auto rng = make_rng(seed, {22, j});
        const RegretSeries r = regret_metrics(bo_run(*validation[j], *model, steps, rng, config.bo));
        last.push_back(r.simple.back());
        late.push_back(late_inference(r, 50));
      }
      return {mean_of(last), mean_of(late)};
    };
  }

  auto rng = make_rng(seed, {23});
  for (int k = 0; k < budget; ++k) {
    result.samples.push_back(sample_search_config(rng, config.learner_options.meta, n_tasks));
  }
  for (std::size_t k = 0; k < result.samples.size(); ++k) result.scores.push_back(scorer(result.samples[k], k));
  result.best_index = select_by_average_rank(result.scores);
  result.best = result.samples[result.best_index];
  return result;
}

}  // namespace fpacoh
