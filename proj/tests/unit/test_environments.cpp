// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fpacoh/bo.hpp"
#include "fpacoh/environments.hpp"
#include "fpacoh/hpo.hpp"
#include "oracles.hpp"

using namespace fpacoh;
namespace fs = std::filesystem;

namespace {

// Standard six-dimensional Hartmann function, written out independently.
double hartmann6_reference(const double* x) {
  const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  const double a[4][6] = {{10, 3, 17, 3.5, 1.7, 8}, {0.05, 10, 17, 0.1, 8, 14}, {3, 3.5, 1.7, 10, 17, 8},
                          {17, 8, 0.05, 10, 0.1, 14}};
  const double p[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                          {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                          {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                          {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double e = 0.0;
    for (int j = 0; j < 6; ++j) e += a[i][j] * (x[j] - p[i][j]) * (x[j] - p[i][j]);
    s += alpha[i] * std::exp(-e);
  }
  return s;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("negated canonical Branin optimum") {
  const BraninTask task(BraninParams::canonical());
  CHECK(task.optimum_value() == doctest::Approx(-0.397887).epsilon(1e-4 / 0.397887));
  const double pi = 3.14159265358979;
  for (const Vector& x : {vec({-pi, 12.275}), vec({pi, 2.275}), vec({9.42478, 2.475})}) {
    CHECK(std::abs(task.evaluate(x) + 0.397887) < 1e-5);
  }
  CHECK(task.evaluate(vec({0.0, 0.0})) < task.optimum_value());
}

TEST_CASE("canonical Hartmann6 maximum is one") {
  const Hartmann6Task task(Hartmann6Params{});
  const double xs[6] = {0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573};
  const double reference = hartmann6_reference(xs);
  CHECK(reference == doctest::Approx(3.32237).epsilon(1e-5));
  CHECK(task.evaluate(Eigen::Map<const Vector>(xs, 6)) == doctest::Approx(reference / 3.322368).epsilon(1e-12));
  CHECK(std::abs(task.optimum_value() - 1.0) < 1e-3);
  CHECK((task.optimum_x() - Eigen::Map<const Vector>(xs, 6)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("mixture is positive and its optimum beats a dense grid") {
  std::mt19937_64 rng(30);
  for (int k = 0; k < 5; ++k) {
    const auto task = sample_mixture_task(rng);
    double best = -1e300;
    for (int i = 0; i <= 20000; ++i) {
      const double x = -10.0 + 20.0 * i / 20000.0;
      const double f = task->evaluate(Vector::Constant(1, x));
      CHECK(f > 0.0);
      best = std::max(best, f);
    }
    CHECK(task->optimum_value() >= best - 1e-9);
    CHECK(task->optimum_value() <= best + 1e-3);
  }
}

TEST_CASE("mixture formula hand value") {
  const MixtureParams p;
  const double pi = 3.14159265358979323846;
  const double x = 0.0;
  const double expect = 2.0 / (pi * 5.0) + 1.5 * std::exp(-9.0 / 8.0) / std::sqrt(2.0 * pi) +
                        1.8 / (pi * (1.0 + 64.0 / 4.0)) + 1.0;
  CHECK(MixtureTask::value(p, x) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("camelback clip and 2D optima against a grid") {
  CHECK(CamelbackTask::clipped_camelback(vec({2.0, 2.0})) == -2.5);
  std::mt19937_64 rng(31);
  const auto task = sample_camelback_task(rng);
  double best = -1e300;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      best = std::max(best, task->evaluate(vec({-2.0 + 4.0 * i / 400.0, -1.0 + 3.0 * j / 400.0})));
    }
  }
  CHECK(task->optimum_value() >= best - 1e-9);
  CHECK(task->optimum_value() <= best + 1e-2);
}

TEST_CASE("maximize_on_box finds a concave optimum in 3D") {
  const Box box(Vector::Zero(3), Vector::Ones(3));
  const Vector c = vec({0.3, 0.7, 0.55});
  const auto r = maximize_on_box([&](const Vector& x) { return -(x - c).squaredNorm(); }, box);
  CHECK((r.x - c).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("sobol sequence leading points") {
  const Matrix s = sobol_sequence(4, 2);
  CHECK(s(0, 0) == 0.5);
  CHECK(s(0, 1) == 0.5);
  CHECK(s(1, 0) == 0.75);
  CHECK(s(1, 1) == 0.25);
  CHECK(s(2, 0) == 0.25);
  CHECK(s(2, 1) == 0.75);
  CHECK_THROWS_AS(sobol_sequence(2, 7), DimensionMismatch);
}

TEST_CASE("samplers are deterministic and within their ranges") {
  std::mt19937_64 a(32), b(32);
  for (int i = 0; i < 50; ++i) {
    const auto p = sample_branin_params(a);
    const auto q = sample_branin_params(b);
    CHECK(p.a == q.a);
    CHECK(p.a >= 0.5);
    CHECK(p.a <= 1.5);
    CHECK(p.b >= 0.1);
    CHECK(p.b <= 0.15);
    CHECK(p.t >= 0.03);
    CHECK(p.t <= 0.05);
    const auto h = sample_hartmann6_params(a);
    sample_hartmann6_params(b);
    CHECK(h.alpha[2] >= 2.0);
    CHECK(h.alpha[3] <= 3.6);
    const auto m = sample_mixture_params(a);
    sample_mixture_params(b);
    for (double w : m.w) {
      CHECK(w >= 0.6);
      CHECK(w <= 1.4);
    }
  }
}

TEST_CASE("registry") {
  for (const auto& name : {"mixture_1d", "random_branin", "camelback_sin", "random_hartmann6"}) {
    const auto env = make_environment(name);
    CHECK(env->name() == name);
    std::mt19937_64 rng(1);
    const auto task = env->sample_task(rng);
    CHECK(task->domain().dim() == env->dim());
  }
  CHECK(make_environment("random_branin")->default_num_tasks() == 20);
  CHECK(make_environment("random_hartmann6")->default_task_size() == 100);
  CHECK(make_environment("mixture_1d")->default_task_size() == 10);
  try {
    make_environment("nope");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "env");
  }
  CHECK_THROWS_AS(make_environment("glmnet"), ConfigError);
}

TEST_CASE("lookup-table transforms round trip") {
  const double raw[] = {0.001, 0.37, 1.0, 12.0, 250.0};
  for (auto algo : {HpoAlgorithm::kGlmnet, HpoAlgorithm::kRpart, HpoAlgorithm::kXgboost}) {
    for (const auto& col : hpo_columns(algo)) {
      if (col == "booster") continue;
      for (double v : raw) {
        const double t = hpo_transform(algo, col, format_double(v));
        CHECK(hpo_inverse(algo, col, t) == doctest::Approx(v).epsilon(1e-12));
      }
    }
  }
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "booster", "gblinear") == -1.0);
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "booster", "gbtree") == 1.0);
  CHECK_THROWS_AS(hpo_transform(HpoAlgorithm::kXgboost, "booster", "dart"), SchemaError);
  CHECK_THROWS_AS(hpo_transform(HpoAlgorithm::kGlmnet, "lambda", "-1"), SchemaError);
  CHECK_THROWS_AS(hpo_transform(HpoAlgorithm::kGlmnet, "cp", "1"), SchemaError);
}

TEST_CASE("lookup-table transform hand values") {
  CHECK(hpo_transform(HpoAlgorithm::kGlmnet, "lambda", "1024") == doctest::Approx(1.0));
  CHECK(hpo_transform(HpoAlgorithm::kRpart, "cp", "0.25") == doctest::Approx(1.0));
  CHECK(hpo_transform(HpoAlgorithm::kRpart, "maxdepth", "30") == doctest::Approx(3.0));
  CHECK(hpo_transform(HpoAlgorithm::kRpart, "minsplit", "10") == doctest::Approx(0.5));
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "nrounds", "3000") == doctest::Approx(1.0));
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "eta", "0.125") == doctest::Approx(1.0));
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "alpha", "32") == doctest::Approx(1.0));
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "subsample", "0.9") == doctest::Approx(0.2));
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "min_child_weight", "70") == doctest::Approx(1.0));
  CHECK(hpo_transform(HpoAlgorithm::kXgboost, "max_depth", "7") == 7.0);
}

TEST_CASE("lookup-table ingestion and tasks") {
  const fs::path dir = fs::temp_directory_path() / "fpacoh_hpo_unit";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "3.csv");
    f << "alpha,lambda,auc\n0.1,1,0.7\n0.5,2,0.9\n1,4,0.8\n";
    std::ofstream g(dir / "335.csv");
    g << "lambda,alpha,auc,extra\n8,0.2,0.6,x\n16,0.9,0.65,y\n";
  }
  const HpoTable table = load_hpo_table(dir.string(), HpoAlgorithm::kGlmnet);
  CHECK(table.datasets.size() == 2);
  CHECK(table.available_ids(Split::kMetaTrain) == std::vector<int>{3});
  CHECK(table.available_ids(Split::kMetaTest) == std::vector<int>{335});
  const Box box = table.bounding_box();
  CHECK(box.lower(0) == doctest::Approx(0.1));
  CHECK(box.upper(1) == doctest::Approx(0.4));

  const auto task = hpo_env_from_table(table, 3);
  CHECK(task->optimum_value() == 0.9);
  CHECK(task->evaluate(task->optimum_x()) == 0.9);
  CHECK(task->oracle_tolerance() == 0.0);
  CHECK_THROWS_AS(task->evaluate(vec({0.3, 0.3})), NotInDomain);
  CHECK(task->domain().is_finite());
  CHECK_THROWS_AS(hpo_env_from_table(table, 1036), UnknownDatasetId);

  const auto env = make_hpo_environment(table);
  std::mt19937_64 rng(3);
  const auto test_task = env->sample_task(rng, Split::kMetaTest);
  CHECK(test_task->optimum_value() == 0.65);
  CHECK(env->default_task_size() == 10);

  {
    std::ofstream bad(dir / "1036.csv");
    bad << "alpha,auc\n0.1,0.5\n";
  }
  CHECK_THROWS_AS(load_hpo_table(dir.string(), HpoAlgorithm::kGlmnet), SchemaError);
  fs::remove(dir / "1036.csv");
  {
    std::ofstream unknown(dir / "999999.csv");
    unknown << "alpha,lambda,auc\n0.1,1,0.7\n";
  }
  CHECK_THROWS_AS(load_hpo_table(dir.string(), HpoAlgorithm::kGlmnet), UnknownDatasetId);
  fs::remove(dir / "999999.csv");
  {
    std::ofstream range(dir / "1038.csv");
    range << "alpha,lambda,auc\n0.1,1,1.7\n";
  }
  CHECK_THROWS_AS(load_hpo_table(dir.string(), HpoAlgorithm::kGlmnet), SchemaError);
  fs::remove_all(dir);
}
