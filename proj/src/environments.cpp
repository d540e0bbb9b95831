// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "fpacoh/errors.hpp"
#include "fpacoh/hpo.hpp"

namespace fpacoh {
namespace {

constexpr double kPi = std::numbers::pi;

// Coordinate pattern search with step halving until every step is below
// `min_rel` of the box width.
OptimumResult pattern_search(const std::function<double(const Vector&)>& f, const Box& box, Vector x, double fx,
                             Vector step, double min_rel) {
  const Vector width = box.width().cwiseMax(1e-300);
  while (((step.array() / width.array()) > min_rel).any()) {
    bool improved = false;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        Vector y = x;
        y(d) = std::clamp(x(d) + sign * step(d), box.lower(d), box.upper(d));
        if (y(d) == x(d)) continue;
        const double fy = f(y);
        if (fy > fx) {
          x = std::move(y);
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {std::move(x), fx};
}

// Joe-Kuo direction numbers for dimensions 2..6.
struct SobolDirection {
  unsigned s;
  unsigned a;
  std::array<unsigned, 4> m;
};
constexpr std::array<SobolDirection, 5> kSobolDirections{{
    {1, 0, {1, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0}},
    {3, 1, {1, 3, 1, 0}},
    {3, 2, {1, 1, 1, 0}},
    {4, 1, {1, 1, 3, 3}},
}};

Domain make_box_domain(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Vector l(static_cast<Eigen::Index>(lo.size()));
  Vector h(static_cast<Eigen::Index>(hi.size()));
  Eigen::Index i = 0;
  for (double v : lo) l(i++) = v;
  i = 0;
  for (double v : hi) h(i++) = v;
  return Domain(Box(l, h));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

template <typename TaskT, typename Params>
OptimumResult oracle_for(const Params& p, const Domain& domain) {
  return maximize_on_box([&p](const Vector& x) { return TaskT::value(p, x); }, domain.box());
}

class SimulatedEnvironment final : public Environment {
 public:
  using Sampler = std::shared_ptr<const Task> (*)(std::mt19937_64&);
  SimulatedEnvironment(std::string name, Domain domain, Sampler sampler, int n, int t)
      : name_(std::move(name)), domain_(std::move(domain)), sampler_(sampler), n_(n), t_(t) {}

  std::string name() const override { return name_; }
  Eigen::Index dim() const override { return domain_.dim(); }
  Box measurement_box() const override { return domain_.box(); }
  std::shared_ptr<const Task> sample_task(std::mt19937_64& rng, Split) const override { return sampler_(rng); }
  int default_num_tasks() const override { return n_; }
  int default_task_size() const override { return t_; }

 private:
  std::string name_;
  Domain domain_;
  Sampler sampler_;
  int n_;
  int t_;
};

}  // namespace

Matrix sobol_sequence(int n, int dim) {
  if (dim < 1 || dim > 6) throw DimensionMismatch("sobol_sequence: supports 1..6 dimensions");
  constexpr unsigned kBits = 32;
  std::vector<std::array<std::uint64_t, kBits>> v(static_cast<std::size_t>(dim));
  for (unsigned i = 0; i < kBits; ++i) v[0][i] = std::uint64_t{1} << (kBits - 1 - i);
  for (int d = 1; d < dim; ++d) {
    const auto& dir = kSobolDirections[static_cast<std::size_t>(d - 1)];
    auto& vd = v[static_cast<std::size_t>(d)];
    for (unsigned i = 0; i < dir.s; ++i) vd[i] = std::uint64_t{dir.m[i]} << (kBits - 1 - i);
    for (unsigned i = dir.s; i < kBits; ++i) {
      std::uint64_t value = vd[i - dir.s] ^ (vd[i - dir.s] >> dir.s);
      for (unsigned k = 1; k < dir.s; ++k) {
        if ((dir.a >> (dir.s - 1 - k)) & 1U) value ^= vd[i - k];
      }
      vd[i] = value;
    }
  }
  Matrix out(n, dim);
  std::vector<std::uint64_t> x(static_cast<std::size_t>(dim), 0);
  for (int i = 0; i < n; ++i) {
    // Gray-code update for index i+1 (the origin at index 0 is skipped).
    const auto idx = static_cast<std::uint64_t>(i);
    unsigned c = 0;
    while ((idx >> c) & 1U) ++c;
    for (int d = 0; d < dim; ++d) {
      x[static_cast<std::size_t>(d)] ^= v[static_cast<std::size_t>(d)][c];
      out(i, d) = static_cast<double>(x[static_cast<std::size_t>(d)]) / static_cast<double>(std::uint64_t{1} << kBits);
    }
  }
  return out;
}

OptimumResult maximize_on_box(const std::function<double(const Vector&)>& f, const Box& box, int grid_per_dim,
                              int sobol_starts) {
  const Eigen::Index dim = box.dim();
  const Vector width = box.width();
  std::vector<OptimumResult> starts;
  if (dim <= 2) {
    const int per_dim = dim == 1 ? grid_per_dim * 10 : grid_per_dim;
    const Eigen::Index total = dim == 1 ? per_dim : static_cast<Eigen::Index>(per_dim) * per_dim;
    starts.reserve(static_cast<std::size_t>(total));
    Vector x(dim);
    for (Eigen::Index k = 0; k < total; ++k) {
      Eigen::Index rem = k;
      for (Eigen::Index d = 0; d < dim; ++d) {
        const Eigen::Index i = rem % per_dim;
        rem /= per_dim;
        x(d) = box.lower(d) + width(d) * static_cast<double>(i) / static_cast<double>(per_dim - 1);
      }
      starts.push_back({x, f(x)});
    }
  } else {
    const Matrix u = sobol_sequence(sobol_starts, static_cast<int>(dim));
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
      Vector x = box.lower + u.row(k).transpose().cwiseProduct(width);
      starts.push_back({x, f(x)});
    }
  }
  std::stable_sort(starts.begin(), starts.end(),
                   [](const OptimumResult& a, const OptimumResult& b) { return a.value > b.value; });

  // Grids: refine the best few cells. Sobol starts: coarse refinement of every
  // start, then a fine pass over the best ones.
  std::vector<OptimumResult> refined;
  if (dim <= 2) {
    const int per_dim = dim == 1 ? grid_per_dim * 10 : grid_per_dim;
    const Vector step = width / static_cast<double>(per_dim - 1);
    const std::size_t keep = std::min<std::size_t>(16, starts.size());
    for (std::size_t i = 0; i < keep; ++i) {
      refined.push_back(pattern_search(f, box, starts[i].x, starts[i].value, step, 1e-9));
    }
  } else {
    std::vector<OptimumResult> coarse;
    coarse.reserve(starts.size());
    for (const auto& s : starts) coarse.push_back(pattern_search(f, box, s.x, s.value, 0.05 * width, 1e-3));
    std::stable_sort(coarse.begin(), coarse.end(),
                     [](const OptimumResult& a, const OptimumResult& b) { return a.value > b.value; });
    const std::size_t keep = std::min<std::size_t>(8, coarse.size());
    for (std::size_t i = 0; i < keep; ++i) {
      refined.push_back(pattern_search(f, box, coarse[i].x, coarse[i].value, 1e-3 * width, 1e-9));
    }
  }
  return *std::max_element(refined.begin(), refined.end(),
                           [](const OptimumResult& a, const OptimumResult& b) { return a.value < b.value; });
}

// ---- Mixture -----------------------------------------------------------------

MixtureTask::MixtureTask(MixtureParams p) : params_(p), domain_(make_box_domain({-10.0}, {10.0})) {
  opt_ = maximize_on_box([this](const Vector& x) { return value(params_, x(0)); }, domain_.box());
}

double MixtureTask::value(const MixtureParams& p, double x) {
  const double d1 = x - p.mu[0];
  const double d2 = x - p.mu[1];
  const double d3 = x - p.mu[2];
  const double p1 = 1.0 / (kPi * (1.0 + d1 * d1));
  const double p2 = std::exp(-d2 * d2 / 8.0) / std::sqrt(2.0 * kPi);
  const double p3 = 1.0 / (kPi * (1.0 + d3 * d3 / 4.0));
  return 2.0 * p.w[0] * p1 + 1.5 * p.w[1] * p2 + 1.8 * p.w[2] * p3 + 1.0;
}

std::vector<std::pair<std::string, double>> MixtureTask::parameters() const {
  return {{"w1", params_.w[0]},   {"w2", params_.w[1]},   {"w3", params_.w[2]},
          {"mu1", params_.mu[0]}, {"mu2", params_.mu[1]}, {"mu3", params_.mu[2]}};
}

MixtureParams sample_mixture_params(std::mt19937_64& rng) {
  MixtureParams p;
  for (double& w : p.w) w = uniform(rng, 0.6, 1.4);
  p.mu[0] = normal(rng, -2.0, 0.3);
  p.mu[1] = normal(rng, 3.0, 0.3);
  p.mu[2] = normal(rng, -8.0, 0.3);
  return p;
}

std::shared_ptr<const Task> sample_mixture_task(std::mt19937_64& rng) {
  return std::make_shared<MixtureTask>(sample_mixture_params(rng));
}

// ---- Branin ------------------------------------------------------------------

BraninParams BraninParams::canonical() {
  return {1.0, 5.1 / (4.0 * kPi * kPi), 5.0 / kPi, 6.0, 10.0, 1.0 / (8.0 * kPi)};
}

BraninTask::BraninTask(BraninParams p) : params_(p), domain_(make_box_domain({-5.0, 0.0}, {10.0, 15.0})) {
  opt_ = oracle_for<BraninTask>(params_, domain_);
}

double BraninTask::value(const BraninParams& p, const Vector& x) {
  const double x1 = x(0);
  const double x2 = x(1);
  const double inner = x2 - p.b * x1 * x1 + p.c * x1 - p.r;
  return -(p.a * inner * inner + p.s * (1.0 - p.t) * std::cos(x1) + p.s);
}

std::vector<std::pair<std::string, double>> BraninTask::parameters() const {
  return {{"a", params_.a}, {"b", params_.b}, {"c", params_.c},
          {"r", params_.r}, {"s", params_.s}, {"t", params_.t}};
}

BraninParams sample_branin_params(std::mt19937_64& rng) {
  BraninParams p{};
  p.a = uniform(rng, 0.5, 1.5);
  p.b = uniform(rng, 0.1, 0.15);
  p.c = uniform(rng, 1.0, 2.0);
  p.r = uniform(rng, 5.0, 7.0);
  p.s = uniform(rng, 8.0, 12.0);
  p.t = uniform(rng, 0.03, 0.05);
  return p;
}

std::shared_ptr<const Task> sample_branin_task(std::mt19937_64& rng) {
  return std::make_shared<BraninTask>(sample_branin_params(rng));
}

// ---- Camelback ---------------------------------------------------------------

CamelbackTask::CamelbackTask(CamelbackParams p) : params_(p), domain_(make_box_domain({-2.0, -1.0}, {2.0, 2.0})) {
  opt_ = oracle_for<CamelbackTask>(params_, domain_);
}

double CamelbackTask::clipped_camelback(const Vector& x) {
  const double x1 = x(0);
  const double x2 = x(1);
  const double x1s = x1 * x1;
  const double g = -(4.0 - 2.1 * x1s + x1s * x1s / 3.0) * x1s - x1 * x2 - (4.0 * x2 * x2 - 4.0) * x2 * x2;
  return std::max(g, -2.5);
}

double CamelbackTask::value(const CamelbackParams& p, const Vector& x) {
  return clipped_camelback(x) + p.a * std::sin(p.omega[0] * (x(0) - p.rho[0])) * std::sin(p.omega[1] * (x(1) - p.rho[1]));
}

std::vector<std::pair<std::string, double>> CamelbackTask::parameters() const {
  return {{"a", params_.a},
          {"omega1", params_.omega[0]},
          {"omega2", params_.omega[1]},
          {"rho1", params_.rho[0]},
          {"rho2", params_.rho[1]}};
}

CamelbackParams sample_camelback_params(std::mt19937_64& rng) {
  CamelbackParams p{};
  p.a = uniform(rng, 0.3, 0.5);
  p.omega[0] = uniform(rng, 0.5, 1.0);
  p.omega[1] = uniform(rng, 0.5, 1.0);
  p.rho[0] = normal(rng, 0.0, 0.3);
  p.rho[1] = normal(rng, 0.0, 0.3);
  return p;
}

std::shared_ptr<const Task> sample_camelback_task(std::mt19937_64& rng) {
  return std::make_shared<CamelbackTask>(sample_camelback_params(rng));
}

// ---- Hartmann6 ---------------------------------------------------------------

const std::array<std::array<double, 6>, 4> Hartmann6Task::kA{{
    {10.00, 3.00, 17.00, 3.50, 1.70, 8.00},
    {0.05, 10.00, 17.00, 0.10, 8.00, 14.00},
    {3.00, 3.50, 1.70, 10.00, 17.00, 8.00},
    {17.00, 8.00, 0.05, 10.00, 0.10, 14.00},
}};

const std::array<std::array<double, 6>, 4> Hartmann6Task::kP{{
    {1312e-4, 1696e-4, 5569e-4, 124e-4, 8283e-4, 5886e-4},
    {2329e-4, 4135e-4, 8307e-4, 3736e-4, 1004e-4, 9991e-4},
    {2348e-4, 1451e-4, 3522e-4, 2883e-4, 3047e-4, 6650e-4},
    {4047e-4, 8828e-4, 8732e-4, 5743e-4, 1091e-4, 381e-4},
}};

Hartmann6Task::Hartmann6Task(Hartmann6Params p)
    : params_(p), domain_(make_box_domain({0, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1})) {
  opt_ = oracle_for<Hartmann6Task>(params_, domain_);
}

double Hartmann6Task::value(const Hartmann6Params& p, const Vector& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      const double d = x(static_cast<Eigen::Index>(j)) - kP[i][j];
      inner += kA[i][j] * d * d;
    }
    total += p.alpha[i] * std::exp(-inner);
  }
  return total / kNormalizer;
}

std::vector<std::pair<std::string, double>> Hartmann6Task::parameters() const {
  return {{"alpha1", params_.alpha[0]},
          {"alpha2", params_.alpha[1]},
          {"alpha3", params_.alpha[2]},
          {"alpha4", params_.alpha[3]}};
}

Hartmann6Params sample_hartmann6_params(std::mt19937_64& rng) {
  Hartmann6Params p;
  p.alpha[0] = uniform(rng, 0.5, 1.5);
  p.alpha[1] = uniform(rng, 0.6, 1.4);
  p.alpha[2] = uniform(rng, 2.0, 3.0);
  p.alpha[3] = uniform(rng, 2.8, 3.6);
  return p;
}

std::shared_ptr<const Task> sample_hartmann6_task(std::mt19937_64& rng) {
  return std::make_shared<Hartmann6Task>(sample_hartmann6_params(rng));
}

// ---- Registry ----------------------------------------------------------------

std::vector<std::string> environment_names() {
  return {"mixture_1d", "random_branin", "camelback_sin", "random_hartmann6", "glmnet", "rpart", "xgboost"};
}

std::unique_ptr<Environment> make_environment(const std::string& name, const EnvironmentOptions& options) {
  if (name == "mixture_1d") {
    return std::make_unique<SimulatedEnvironment>(name, make_box_domain({-10.0}, {10.0}), &sample_mixture_task, 10, 10);
  }
  if (name == "random_branin") {
    return std::make_unique<SimulatedEnvironment>(name, make_box_domain({-5.0, 0.0}, {10.0, 15.0}),
                                                  &sample_branin_task, 20, 20);
  }
  if (name == "camelback_sin") {
    return std::make_unique<SimulatedEnvironment>(name, make_box_domain({-2.0, -1.0}, {2.0, 2.0}),
                                                  &sample_camelback_task, 20, 20);
  }
  if (name == "random_hartmann6") {
    return std::make_unique<SimulatedEnvironment>(name, make_box_domain({0, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1}),
                                                  &sample_hartmann6_task, 30, 100);
  }
  if (auto algo = parse_hpo_algorithm(name)) {
    if (options.hpo_dir.empty()) throw ConfigError("hpo_dir", "required for environment '" + name + "'");
    return make_hpo_environment(load_hpo_table(options.hpo_dir + "/" + name, *algo));
  }
  throw ConfigError("env", "unknown environment '" + name + "'");
}

}  // namespace fpacoh
