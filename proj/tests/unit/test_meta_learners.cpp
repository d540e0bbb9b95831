// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "fpacoh/meta_learners.hpp"
#include "oracles.hpp"

using namespace fpacoh;

namespace {

std::vector<TaskDataset> sine_tasks(std::mt19937_64& rng, int n, int t) {
  std::vector<TaskDataset> tasks;
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    TaskDataset d{oracle::random_matrix(t, 1, rng, -3.0, 3.0), Vector(t)};
    const double p = phase(rng);
    for (int j = 0; j < t; ++j) d.y(j) = std::sin(d.x(j, 0) + p) + 0.5 * d.x(j, 0);
    tasks.push_back(d);
  }
  return tasks;
}

}  // namespace

TEST_CASE("kl weight arithmetic") {
  CHECK(kl_coefficient(1.0, 4, 10) == 0.525);
  CHECK(kl_coefficient(0.1, 1, 1) == doctest::Approx(0.2));
}

TEST_CASE("measurement set composition") {
  std::mt19937_64 rng(20);
  TaskDataset task{oracle::random_matrix(10, 1, rng, 0.0, 1.0), Vector::Zero(10)};
  const Box box(Vector::Zero(1), Vector::Ones(1));
  const MeasurementSet m = sample_measurement_set(task, box, rng);
  CHECK(m.x.rows() == 20);
  CHECK(m.task_rows == 10);
  std::vector<double> drawn, source;
  for (int i = 0; i < 10; ++i) {
    drawn.push_back(m.x(i, 0));
    source.push_back(task.x(i, 0));
  }
  std::sort(drawn.begin(), drawn.end());
  std::sort(source.begin(), source.end());
  CHECK(drawn == source);
  for (int i = 10; i < 20; ++i) CHECK(box.contains(m.x.row(i).transpose()));

  TaskDataset small{task.x.topRows(3), task.y.head(3)};
  const MeasurementSet s = sample_measurement_set(small, box, rng);
  CHECK(s.task_rows == 3);
  CHECK(s.x.rows() == 13);
  CHECK_THROWS_AS(sample_measurement_set(small, Box(Vector::Zero(2), Vector::Ones(2)), rng), DimensionMismatch);
}

TEST_CASE("functional KL against the explicit formula") {
  std::mt19937_64 rng(21);
  const auto layout = PriorLayout::make(1, 2, 2, 8);
  const GpPrior prior(layout, layout.initial_params(rng), Standardizer::identity(1));
  const Matrix x = oracle::random_matrix(12, 1, rng, -2.0, 2.0);
  const HyperPriorGp h{0.3, 1.0};
  Matrix kp = prior.kernel(x, x);
  Matrix kq = oracle::se_kernel(x, x, 1.0, 0.3);
  kp.diagonal().array() += kJitterStart;
  kq.diagonal().array() += kJitterStart;
  const double kl = functional_kl(prior, x, h);
  CHECK(kl == doctest::Approx(oracle::kl_direct(prior.mean(x), kp, Vector::Zero(12), kq)).epsilon(1e-6));
  CHECK(kl >= 0.0);
}

TEST_CASE("objective value composes evidence and functional KL") {
  std::mt19937_64 rng(22);
  const auto tasks = sine_tasks(rng, 3, 6);
  const auto layout = PriorLayout::make(1, 2, 1, 6);
  const Vector params = layout.initial_params(rng);
  const Box box(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0));
  std::vector<MeasurementSet> msets;
  for (const auto& t : tasks) msets.push_back(sample_measurement_set(t, box, rng, 3, 3));
  const HyperPriorGp h{0.3, 1.0};
  const int n = 7;
  const double kappa = 0.4;
  const ObjectiveValue v = fpacoh_objective(layout, params, tasks, msets, h, n, kappa);
  const GpPrior prior(layout, params, Standardizer::identity(1));
  double expect = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    expect += -gp_mll(prior, tasks[i]) / 6.0 + kl_coefficient(kappa, n, 6) * functional_kl(prior, msets[i].x, h);
  }
  CHECK(v.value == doctest::Approx(expect / 3.0).epsilon(1e-10));
  CHECK(v.mll_term + v.reg_term == doctest::Approx(v.value).epsilon(1e-10));

  const double var = 10.0;
  const ObjectiveValue m = pacoh_map_objective(layout, params, tasks, n, kappa, var);
  double mll = 0.0;
  for (const auto& t : tasks) mll += -gp_mll(prior, t) / 6.0;
  const double reg = kl_coefficient(kappa, n, 6) * params.squaredNorm() / (2.0 * var);
  CHECK(m.value == doctest::Approx(mll / 3.0 + reg).epsilon(1e-10));
}

TEST_CASE("objective gradients against finite differences") {
  std::mt19937_64 rng(23);
  const auto tasks = sine_tasks(rng, 2, 5);
  const auto layout = PriorLayout::make(1, 2, 2, 8);
  const Vector params = layout.initial_params(rng) + oracle::random_vector(static_cast<int>(layout.size()), rng, 0.05);
  const Box box(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0));
  std::vector<MeasurementSet> msets;
  for (const auto& t : tasks) msets.push_back(sample_measurement_set(t, box, rng, 3, 3));
  const HyperPriorGp h{0.3, 1.0};
  auto fp = [&](const Vector& p) { return fpacoh_objective(layout, p, tasks, msets, h, 2, 0.1).value; };
  auto fm = [&](const Vector& p) { return pacoh_map_objective(layout, p, tasks, 2, 0.1, 10.0).value; };
  const Vector g1 = fpacoh_objective(layout, params, tasks, msets, h, 2, 0.1).grad;
  const Vector d1 = oracle::central_difference(fp, params, 1e-6);
  const Vector g2 = pacoh_map_objective(layout, params, tasks, 2, 0.1, 10.0).grad;
  const Vector d2 = oracle::central_difference(fm, params, 1e-6);
  int checked = 0;
  for (Eigen::Index i = 0; i < g1.size(); ++i) {
    if (std::abs(g1(i)) > 1e-6) {
      CHECK(std::abs(g1(i) - d1(i)) / std::abs(g1(i)) < 1e-3);
      ++checked;
    }
    if (std::abs(g2(i)) > 1e-6) CHECK(std::abs(g2(i) - d2(i)) / std::abs(g2(i)) < 1e-3);
  }
  CHECK(checked > 100);
}

TEST_CASE("meta-training lowers the loss and is deterministic") {
  std::mt19937_64 rng(24);
  const auto tasks = sine_tasks(rng, 6, 10);
  const Box box(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0));
  MetaTrainConfig c;
  c.iterations = 300;
  c.lr = 3e-3;
  c.hidden_width = 16;
  c.seed = 5;
  const auto a = meta_train_fpacoh(tasks, box, c);
  const auto b = meta_train_fpacoh(tasks, box, c);
  CHECK(a.prior.params() == b.prior.params());
  REQUIRE(a.loss_trace.size() == 300);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 30; ++i) {
    head += a.loss_trace[static_cast<std::size_t>(i)];
    tail += a.loss_trace[a.loss_trace.size() - 1 - static_cast<std::size_t>(i)];
  }
  CHECK(tail < head);

  const auto p = meta_train_pacoh_map(tasks, PacohMapConfig{c, 10.0});
  CHECK(p.loss_trace.back() < p.loss_trace.front());

  const auto l = meta_train_learned_gp(tasks);
  std::vector<TaskDataset> st;
  for (const auto& t : tasks) st.push_back(l.standardizer.transform(t));
  CHECK(se_total_mll(l.gp.hypers(), st) >= se_total_mll(SeGpHypers{}, st));
}

TEST_CASE("meta-training input validation") {
  const Box box(Vector::Zero(1), Vector::Ones(1));
  MetaTrainConfig c;
  CHECK_THROWS_AS(meta_train_fpacoh({}, box, c), EmptyData);
  std::vector<TaskDataset> tasks{{Matrix::Zero(2, 1), Vector::Zero(2)}};
  CHECK_THROWS_AS(meta_train_fpacoh(tasks, Box(Vector::Zero(2), Vector::Ones(2)), c), DimensionMismatch);
  c.lr = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = MetaTrainConfig{};
  CHECK(c.resolved_feature_dim(1) == 2);
  CHECK(c.resolved_feature_dim(6) == 6);
  CHECK_THROWS_AS(meta_train_pacoh_map(tasks, PacohMapConfig{c, 0.0}), ConfigError);
}
