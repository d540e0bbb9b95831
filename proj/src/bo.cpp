// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/bo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "fpacoh/errors.hpp"
#include "fpacoh/rng.hpp"

namespace fpacoh {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Index of the first maximum; NaN entries never win.
Eigen::Index first_argmax(const Vector& v) {
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v(i))) continue;
    if (best < 0 || v(i) > v(best)) best = i;
  }
  return best < 0 ? 0 : best;
}

Marginals to_raw(Marginals m, const Standardizer& s) {
  m.mean = s.inverse_y(m.mean);
  m.var = s.inverse_var(m.var);
  return m;
}

Standardizer output_moments(Standardizer s, const Vector& y) {
  s.y_mean = 0.0;
  s.y_std = 1.0;
  if (y.size() == 0) return s;
  s.y_mean = y.mean();
  if (y.size() >= 2) {
    const double sd = std::sqrt((y.array() - s.y_mean).square().mean());
    if (sd > Standardizer::kStdFloor) s.y_std = sd;
  }
  return s;
}

}  // namespace

// ---- Surrogates ----------------------------------------------------------------

PriorSurrogate::PriorSurrogate(GpPrior prior, std::string name)
    : prior_(std::make_unique<GpPrior>(std::move(prior))), name_(std::move(name)) {
  condition(TaskDataset{Matrix(0, prior_->input_dim()), Vector(0)});
}

void PriorSurrogate::condition(const TaskDataset& data) {
  posterior_.reset();
  posterior_.emplace(*prior_, prior_->standardizer().transform(data));
}

Marginals PriorSurrogate::predict(const Matrix& x) const {
  return to_raw(posterior_->marginals(prior_->standardizer().transform_x(x)), prior_->standardizer());
}

double PriorSurrogate::noise_var() const {
  const double s = prior_->standardizer().y_std;
  return prior_->noise_var() * s * s;
}

VanillaSurrogate::VanillaSurrogate(Standardizer input_moments, bool fit_hypers, SeGpHypers init)
    : standardizer_(std::move(input_moments)), init_(init), fit_hypers_(fit_hypers) {
  condition(TaskDataset{Matrix(0, standardizer_.x_mean.size()), Vector(0)});
}

void VanillaSurrogate::condition(const TaskDataset& data) {
  posterior_.reset();
  standardizer_ = output_moments(standardizer_, data.y);
  const TaskDataset z = standardizer_.transform(data);
  gp_ = std::make_unique<VanillaGp>(vanilla_gp_fit(VanillaGp(standardizer_.x_mean.size(), init_, fit_hypers_), z));
  posterior_.emplace(*gp_, z);
}

Marginals VanillaSurrogate::predict(const Matrix& x) const {
  return to_raw(posterior_->marginals(standardizer_.transform_x(x)), standardizer_);
}

double VanillaSurrogate::noise_var() const { return gp_->noise_var() * standardizer_.y_std * standardizer_.y_std; }

LearnedGpSurrogate::LearnedGpSurrogate(LearnedGp model)
    : gp_(std::make_unique<VanillaGp>(model.gp)), standardizer_(std::move(model.standardizer)) {
  condition(TaskDataset{Matrix(0, gp_->input_dim()), Vector(0)});
}

void LearnedGpSurrogate::condition(const TaskDataset& data) {
  posterior_.reset();
  posterior_.emplace(*gp_, standardizer_.transform(data));
}

Marginals LearnedGpSurrogate::predict(const Matrix& x) const {
  return to_raw(posterior_->marginals(standardizer_.transform_x(x)), standardizer_);
}

double LearnedGpSurrogate::noise_var() const {
  return gp_->noise_var() * standardizer_.y_std * standardizer_.y_std;
}

Marginals RandomSearchSurrogate::predict(const Matrix& x) const {
  if (x.cols() != dim_) throw DimensionMismatch("RandomSearchSurrogate: wrong input dimension");
  return {Vector::Zero(x.rows()), Vector::Zero(x.rows())};
}

// ---- Acquisition -----------------------------------------------------------------

Vector ucb(const Surrogate& model, const Matrix& x, double beta) {
  const Marginals m = model.predict(x);
  return m.mean + beta * m.var.cwiseMax(0.0).cwiseSqrt();
}

double ucb(const Surrogate& model, const Vector& x, double beta) {
  return ucb(model, Matrix(x.transpose()), beta)(0);
}

Vector maximize_acquisition(const std::function<Vector(const Matrix&)>& objective, const Domain& domain,
                            std::mt19937_64& rng, const AcquisitionOptions& options) {
  if (domain.is_finite()) {
    const Matrix& c = domain.candidates();
    constexpr Eigen::Index kChunk = 4096;
    Eigen::Index best = -1;
    double best_value = 0.0;
    for (Eigen::Index start = 0; start < c.rows(); start += kChunk) {
      const Eigen::Index len = std::min(kChunk, c.rows() - start);
      const Vector v = objective(c.middleRows(start, len));
      for (Eigen::Index i = 0; i < len; ++i) {
        if (std::isnan(v(i))) continue;
        if (best < 0 || v(i) > best_value) {
          best = start + i;
          best_value = v(i);
        }
      }
    }
    return c.row(std::max<Eigen::Index>(best, 0)).transpose();
  }

  const Box& box = domain.box();
  const Eigen::Index dim = box.dim();
  const Matrix cand = box.sample(rng, std::max(1, options.candidates));
  const Vector values = objective(cand);
  const Eigen::Index best = first_argmax(values);
  Vector x = cand.row(best).transpose();
  double fx = values(best);
  Vector step = options.initial_step * box.width();

  Matrix neighbours(2 * dim, dim);
  for (int s = 0; s < options.refine_steps; ++s) {
    for (Eigen::Index d = 0; d < dim; ++d) {
      Vector up = x;
      Vector down = x;
      up(d) = std::min(x(d) + step(d), box.upper(d));
      down(d) = std::max(x(d) - step(d), box.lower(d));
      neighbours.row(2 * d) = up.transpose();
      neighbours.row(2 * d + 1) = down.transpose();
    }
    const Vector v = objective(neighbours);
    const Eigen::Index k = first_argmax(v);
    if (v(k) > fx) {
      x = neighbours.row(k).transpose();
      fx = v(k);
    } else {
      step *= 0.5;
    }
  }
  return x;
}

// ---- BO loop ---------------------------------------------------------------------

TaskDataset BoTrace::data() const {
  TaskDataset d;
  const Eigen::Index dim = steps.empty() ? 0 : steps.front().x.size();
  d.x.resize(static_cast<Eigen::Index>(steps.size()), dim);
  d.y.resize(static_cast<Eigen::Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) {
    d.x.row(static_cast<Eigen::Index>(i)) = steps[i].x.transpose();
    d.y(static_cast<Eigen::Index>(i)) = steps[i].y;
  }
  return d;
}

RegretSeries regret_metrics(const BoTrace& trace) {
  RegretSeries r;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : trace.steps) {
    best = std::max(best, s.f_x);
    r.simple.push_back(trace.optimum - best);
    r.inference.push_back(std::isnan(s.f_x_hat) ? kNaN : trace.optimum - s.f_x_hat);
  }
  return r;
}

BoTrace bo_run(const Task& task, Surrogate& model, int steps, std::mt19937_64& rng, const BoOptions& options) {
  if (steps < 1) throw ConfigError("T", "bo_run needs at least one step");
  const Domain& domain = task.domain();
  BoTrace trace;
  trace.optimum = task.optimum_value();
  trace.oracle_tolerance = task.oracle_tolerance();

  TaskDataset data{Matrix(0, domain.dim()), Vector(0)};
  model.condition(data);
  auto acquisition = [&](const Matrix& x) { return ucb(model, x, options.beta); };
  auto mean = [&](const Matrix& x) { return model.predict(x).mean; };

  for (int t = 1; t <= steps; ++t) {
    BoStep step;
    step.t = t;
    step.x = model.is_random() ? Vector(domain.sample_uniform(rng, 1).row(0).transpose())
                               : maximize_acquisition(acquisition, domain, rng, options.acquisition);
    step.y = task.evaluate(step.x);
    step.f_x = step.y;

    data.x.conservativeResize(data.x.rows() + 1, Eigen::NoChange);
    data.x.row(data.x.rows() - 1) = step.x.transpose();
    data.y.conservativeResize(data.y.size() + 1);
    data.y(data.y.size() - 1) = step.y;
    model.condition(data);

    if (model.is_random()) {
      step.f_x_hat = kNaN;
    } else {
      step.x_hat = maximize_acquisition(mean, domain, rng, options.acquisition);
      step.f_x_hat = task.evaluate(step.x_hat);
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

std::vector<TaskDataset> collect_meta_data(const Environment& env, int n_tasks, int task_size, std::uint64_t seed,
                                           Split split, const BoOptions& options) {
  if (n_tasks < 1) throw ConfigError("n", "need at least one task");
  const Standardizer moments = Domain(env.measurement_box()).input_moments();
  std::vector<TaskDataset> out;
  out.reserve(static_cast<std::size_t>(n_tasks));
  for (int i = 0; i < n_tasks; ++i) {
    auto task_rng = make_rng(seed, {1, static_cast<std::uint64_t>(i)});
    const auto task = env.sample_task(task_rng, split);
    VanillaSurrogate model(moments);
    auto bo_rng = make_rng(seed, {2, static_cast<std::uint64_t>(i)});
    out.push_back(bo_run(*task, model, task_size, bo_rng, options).data());
  }
  return out;
}

// ---- Learners --------------------------------------------------------------------

std::optional<Learner> parse_learner(const std::string& name) {
  if (name == "fpacoh") return Learner::kFpacoh;
  if (name == "pacoh_map") return Learner::kPacohMap;
  if (name == "learned_gp") return Learner::kLearnedGp;
  if (name == "vanilla") return Learner::kVanilla;
  if (name == "random_search") return Learner::kRandomSearch;
  return std::nullopt;
}

std::string to_string(Learner learner) {
  switch (learner) {
    case Learner::kFpacoh:
      return "fpacoh";
    case Learner::kPacohMap:
      return "pacoh_map";
    case Learner::kLearnedGp:
      return "learned_gp";
    case Learner::kVanilla:
      return "vanilla";
    case Learner::kRandomSearch:
      return "random_search";
  }
  return "unknown";
}

std::vector<std::string> learner_names() { return {"fpacoh", "pacoh_map", "learned_gp", "vanilla", "random_search"}; }

std::unique_ptr<Surrogate> make_surrogate(Learner learner, std::span<const TaskDataset> meta_data,
                                          const Environment& env, const LearnerOptions& options, std::uint64_t seed) {
  switch (learner) {
    case Learner::kFpacoh: {
      MetaTrainConfig cfg = options.meta;
      cfg.seed = seed;
      return std::make_unique<PriorSurrogate>(meta_train_fpacoh(meta_data, env.measurement_box(), cfg).prior,
                                              "fpacoh");
    }
    case Learner::kPacohMap: {
      PacohMapConfig cfg{options.meta, options.pacoh_hyperprior_variance};
      cfg.base.seed = seed;
      return std::make_unique<PriorSurrogate>(meta_train_pacoh_map(meta_data, cfg).prior, "pacoh_map");
    }
    case Learner::kLearnedGp:
      return std::make_unique<LearnedGpSurrogate>(meta_train_learned_gp(meta_data, options.learned));
    case Learner::kVanilla:
      return std::make_unique<VanillaSurrogate>(Domain(env.measurement_box()).input_moments());
    case Learner::kRandomSearch:
      return std::make_unique<RandomSearchSurrogate>(env.dim());
  }
  throw ConfigError("learner", "unknown learner");
}

LifelongResult lifelong_bo(const Environment& env, int n_runs, int steps, Learner learner,
                           const LearnerOptions& options, std::uint64_t seed, const BoOptions& bo_options,
                           std::span<const TaskDataset> bank) {
  if (learner == Learner::kRandomSearch) throw ConfigError("learner", "lifelong BO needs a model-based learner");
  if (n_runs < 1) throw ConfigError("n", "need at least one run");
  LifelongResult result;
  std::vector<TaskDataset> meta_bank(bank.begin(), bank.end());
  double cumulative = 0.0;
  for (int i = 0; i < n_runs; ++i) {
    const auto run = static_cast<std::uint64_t>(i);
    auto task_rng = make_rng(seed, {1, run});
    const auto task = env.sample_task(task_rng, Split::kMetaTest);

    std::unique_ptr<Surrogate> model;
    if (learner != Learner::kVanilla && !meta_bank.empty()) {
      try {
        model = make_surrogate(learner, meta_bank, env, options, derive_seed(seed, {3, run}));
      } catch (const Error& e) {
        result.log.push_back("run " + std::to_string(i) + ": meta-training failed, using vanilla GP: " + e.what());
      }
    }
    if (!model) model = make_surrogate(Learner::kVanilla, {}, env, options, 0);

    auto bo_rng = make_rng(seed, {2, run});
    BoTrace trace = bo_run(*task, *model, steps, bo_rng, bo_options);
    const RegretSeries r = regret_metrics(trace);
    std::vector<double> cum;
    for (double v : r.inference) {
      cumulative += v;
      cum.push_back(cumulative);
    }
    result.cumulative_inference.push_back(std::move(cum));
    result.final_simple_regret.push_back(r.simple.back());
    meta_bank.push_back(trace.data());
    result.traces.push_back(std::move(trace));
  }
  return result;
}

// ---- Output ----------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

void write_trace_csv(std::ostream& out, std::span<const BoTrace> traces) {
  const Eigen::Index dim = traces.empty() || traces.front().steps.empty() ? 0 : traces.front().steps.front().x.size();
  out << "run,t";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",x" << d;
  out << ",y,simple_regret,inference_regret,cumulative_inference_regret\n";
  double cumulative = 0.0;
  for (std::size_t run = 0; run < traces.size(); ++run) {
    const RegretSeries r = regret_metrics(traces[run]);
    for (std::size_t k = 0; k < traces[run].steps.size(); ++k) {
      const BoStep& s = traces[run].steps[k];
      cumulative += r.inference[k];
      out << run << ',' << s.t;
      for (Eigen::Index d = 0; d < dim; ++d) out << ',' << format_double(s.x(d));
      out << ',' << format_double(s.y) << ',' << format_double(r.simple[k]) << ',' << format_double(r.inference[k])
          << ',' << format_double(cumulative) << '\n';
    }
  }
}

}  // namespace fpacoh
