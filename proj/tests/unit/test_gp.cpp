// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <random>
#include <vector>

#include "doctest.h"
#include "fpacoh/checkpoint.hpp"
#include "fpacoh/gp.hpp"
#include "fpacoh/gp_prior.hpp"
#include "fpacoh/se_gp.hpp"
#include "oracles.hpp"

using namespace fpacoh;

namespace {

GpPrior random_prior(std::mt19937_64& rng, int dim, int width = 8) {
  const auto layout = PriorLayout::make(dim, 2, 2, width);
  Vector p = layout.initial_params(rng);
  p(layout.log_outputscale_index()) = 0.3;
  p(layout.log_lengthscale_index()) = -0.2;
  p(layout.log_noise_index()) = std::log(0.2);
  return GpPrior(layout, p, Standardizer::identity(dim));
}

}  // namespace

TEST_CASE("log evidence hand value") {
  const VanillaGp gp(1, SeGpHypers{0.0, 1.0, 0.99, 0.1}, false);
  const TaskDataset d{Matrix::Zero(1, 1), Vector::Zero(1)};
  CHECK(gp_mll(gp, d) == doctest::Approx(-0.918939).epsilon(1e-6));
  CHECK_THROWS_AS(gp_mll(gp, TaskDataset{Matrix(0, 1), Vector(0)}), EmptyData);
}

TEST_CASE("posterior and evidence agree with explicit inversion") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 1 + trial % 3;
    const GpPrior prior = random_prior(rng, dim);
    const int t = 3 + trial;
    const TaskDataset train{oracle::random_matrix(t, dim, rng, -2.0, 2.0), oracle::random_vector(t, rng)};
    const Matrix q = oracle::random_matrix(7, dim, rng, -2.0, 2.0);

    const Matrix ft = prior.features(train.x);
    const Matrix fq = prior.features(q);
    const double nu = prior.outputscale();
    const double l = prior.lengthscale();
    const auto ref = oracle::gp_posterior(oracle::se_kernel(ft, ft, nu, l), oracle::se_kernel(ft, fq, nu, l),
                                          oracle::se_kernel(fq, fq, nu, l), prior.mean(train.x), prior.mean(q),
                                          train.y, prior.noise_var());
    const Mvn post = gp_posterior(prior, train, q);
    CHECK((post.mean() - ref.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((post.cov() - ref.cov).cwiseAbs().maxCoeff() < 1e-8);
    const Marginals m = ConditionedGp(prior, train).marginals(q);
    CHECK((m.var - ref.cov.diagonal()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(gp_mll(prior, train) ==
          doctest::Approx(oracle::gp_log_evidence(oracle::se_kernel(ft, ft, nu, l), prior.mean(train.x), train.y,
                                                  prior.noise_var()))
              .epsilon(1e-10));
  }
}

TEST_CASE("conditioning never increases variance") {
  std::mt19937_64 rng(12);
  const GpPrior prior = random_prior(rng, 2);
  const TaskDataset train{oracle::random_matrix(10, 2, rng, -1.0, 1.0), oracle::random_vector(10, rng)};
  const Matrix q = oracle::random_matrix(50, 2, rng, -3.0, 3.0);
  const Marginals post = ConditionedGp(prior, train).marginals(q);
  const Vector prior_var = prior.kernel_diag(q);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    CHECK(post.var(i) >= 0.0);
    CHECK(post.var(i) <= prior_var(i) + 1e-8);
  }
}

TEST_CASE("empty training set returns the prior") {
  std::mt19937_64 rng(13);
  const GpPrior prior = random_prior(rng, 1);
  const Matrix q = oracle::random_matrix(4, 1, rng, -1.0, 1.0);
  const Mvn p = gp_posterior(prior, TaskDataset{Matrix(0, 1), Vector(0)}, q);
  CHECK((p.mean() - prior.mean(q)).norm() < 1e-14);
  CHECK((p.cov() - prior.kernel(q, q)).norm() < 1e-14);
}

TEST_CASE("tape evidence matches the plain evaluation and gradient") {
  std::mt19937_64 rng(14);
  const GpPrior prior = random_prior(rng, 1, 6);
  const TaskDataset d{oracle::random_matrix(5, 1, rng, -1.0, 1.0), oracle::random_vector(5, rng)};
  ad::Tape tape(prior.params());
  const ad::Var v = gp_mll(prior.layout(), tape, d);
  CHECK(v.scalar() == doctest::Approx(gp_mll(prior, d)).epsilon(1e-12));
  const Vector g = tape.gradient(v);
  const Vector fd = oracle::central_difference(
      [&](const Vector& p) { return gp_mll(GpPrior(prior.layout(), p, prior.standardizer()), d); }, prior.params(),
      1e-6);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g(i)) > 1e-6) CHECK(std::abs(g(i) - fd(i)) / std::abs(g(i)) < 1e-4);
  }
}

TEST_CASE("hyper-prior kernel convention") {
  std::mt19937_64 rng(15);
  const HyperPriorGp h{0.3, 1.0};
  const Matrix a = oracle::random_matrix(4, 2, rng, 0.0, 1.0);
  CHECK((h.kernel(a, a) - oracle::se_kernel(a, a, 1.0, 0.3)).cwiseAbs().maxCoeff() < 1e-14);
  Matrix two(2, 1);
  two << 0.0, 1.0;
  CHECK(h.kernel(two, two)(0, 1) == doctest::Approx(std::exp(-1.0 / 0.6)));
}

TEST_CASE("vanilla kernel uses squared lengthscale") {
  const VanillaGp gp(1, SeGpHypers{0.5, 2.0, 3.0, 0.1}, false);
  Matrix a(2, 1);
  a << 0.0, 1.0;
  CHECK(gp.kernel(a, a)(0, 1) == doctest::Approx(3.0 * std::exp(-1.0 / 8.0)));
  CHECK(gp.mean(a)(1) == 0.5);
}

TEST_CASE("MLE refit improves the evidence and respects bounds") {
  std::mt19937_64 rng(16);
  TaskDataset d{oracle::random_matrix(15, 1, rng, -2.0, 2.0), Vector(15)};
  for (int i = 0; i < 15; ++i) d.y(i) = std::sin(2.0 * d.x(i, 0));
  const VanillaGp start(1, SeGpHypers{}, true);
  const VanillaGp fitted = vanilla_gp_fit(start, d);
  CHECK(gp_mll(fitted, d) >= gp_mll(start, d));
  const SeGpBounds b;
  CHECK(fitted.hypers().lengthscale >= b.lengthscale_min);
  CHECK(fitted.hypers().lengthscale <= b.lengthscale_max);
  CHECK(fitted.hypers().noise_std >= b.noise_min);
  CHECK(fitted.hypers().noise_std <= b.noise_max);

  const TaskDataset small{d.x.topRows(4), d.y.head(4)};
  CHECK(vanilla_gp_fit(start, small).hypers() == start.hypers());
  CHECK(vanilla_gp_fit(VanillaGp(1, SeGpHypers{}, false), d).hypers() == SeGpHypers{});
}

TEST_CASE("standardizer moments and inverse") {
  std::vector<TaskDataset> tasks(2);
  tasks[0] = {Matrix::Constant(2, 1, 1.0), Vector::Constant(2, 2.0)};
  tasks[1] = {Matrix::Constant(2, 1, 3.0), Vector::Constant(2, 4.0)};
  const Standardizer s = fit_standardizer(tasks);
  CHECK(s.x_mean(0) == doctest::Approx(2.0));
  CHECK(s.x_std(0) == doctest::Approx(1.0));
  CHECK(s.y_mean == doctest::Approx(3.0));
  CHECK(s.y_std == doctest::Approx(1.0));
  const Vector y = Vector::LinSpaced(5, -1.0, 7.0);
  CHECK((s.inverse_y(s.transform_y(y)) - y).norm() < 1e-14);
  CHECK(s.inverse_var(Vector::Constant(1, 2.0))(0) == doctest::Approx(2.0));

  std::vector<TaskDataset> flat{{Matrix::Ones(3, 1), Vector::Ones(3)}};
  CHECK(fit_standardizer(flat).y_std == Standardizer::kStdFloor);
  std::vector<TaskDataset> none{{Matrix(0, 1), Vector(0)}};
  CHECK_THROWS_AS(fit_standardizer(none), EmptyData);
}

TEST_CASE("prior checkpoint round trip") {
  std::mt19937_64 rng(17);
  const GpPrior prior = random_prior(rng, 2);
  const GpPrior back = prior_from_json(prior_to_json(prior));
  CHECK(back.layout() == prior.layout());
  CHECK(back.params() == prior.params());
  const Matrix q = oracle::random_matrix(3, 2, rng, -1.0, 1.0);
  CHECK((back.kernel(q, q) - prior.kernel(q, q)).norm() == 0.0);
  const std::string path = "prior_roundtrip_test.json";
  save_prior(prior, path);
  CHECK(load_prior(path).params() == prior.params());
  std::remove(path.c_str());
  CHECK_THROWS_AS(prior_from_json("{\"format\": \"other\"}"), SchemaError);
  CHECK_THROWS_AS(prior_from_json("not json"), SchemaError);
}
