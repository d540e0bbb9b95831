// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/hpo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "fpacoh/errors.hpp"

namespace fpacoh {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& column, const std::string& raw) {
  double v = 0.0;
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw SchemaError("column '" + column + "': cannot parse '" + raw + "'");
  return v;
}

double parse_positive(const std::string& column, const std::string& raw) {
  const double v = parse_number(column, raw);
  if (!(v > 0.0)) throw SchemaError("column '" + column + "': log transform needs a positive value, got '" + raw + "'");
  return v;
}

const std::vector<int>& known_ids() {
  static const std::vector<int> ids = [] {
    std::vector<int> all = hpo_meta_train_ids();
    all.insert(all.end(), hpo_meta_test_ids().begin(), hpo_meta_test_ids().end());
    return all;
  }();
  return ids;
}

bool is_known_id(int id) {
  const auto& ids = known_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

class HpoEnvironment final : public Environment {
 public:
  explicit HpoEnvironment(HpoTable table) : table_(std::move(table)), box_(table_.bounding_box()) {
    for (const auto& [id, rows] : table_.datasets) tasks_.emplace(id, hpo_env_from_table(table_, id));
  }

  std::string name() const override { return to_string(table_.algorithm); }
  Eigen::Index dim() const override { return table_.dim(); }
  Box measurement_box() const override { return box_; }

  std::shared_ptr<const Task> sample_task(std::mt19937_64& rng, Split split) const override {
    const auto ids = table_.available_ids(split);
    if (ids.empty()) throw UnknownDatasetId(name() + ": no datasets available for the requested split");
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    return tasks_.at(ids[pick(rng)]);
  }

  int default_num_tasks() const override { return 20; }
  int default_task_size() const override {
    switch (table_.algorithm) {
      case HpoAlgorithm::kGlmnet:
        return 10;
      case HpoAlgorithm::kRpart:
        return 20;
      case HpoAlgorithm::kXgboost:
        return 50;
    }
    return 20;
  }

 private:
  HpoTable table_;
  Box box_;
  std::map<int, std::shared_ptr<const Task>> tasks_;
};

}  // namespace

std::optional<HpoAlgorithm> parse_hpo_algorithm(const std::string& name) {
  if (name == "glmnet") return HpoAlgorithm::kGlmnet;
  if (name == "rpart") return HpoAlgorithm::kRpart;
  if (name == "xgboost") return HpoAlgorithm::kXgboost;
  return std::nullopt;
}

std::string to_string(HpoAlgorithm algorithm) {
  switch (algorithm) {
    case HpoAlgorithm::kGlmnet:
      return "glmnet";
    case HpoAlgorithm::kRpart:
      return "rpart";
    case HpoAlgorithm::kXgboost:
      return "xgboost";
  }
  return "unknown";
}

const std::vector<std::string>& hpo_columns(HpoAlgorithm algorithm) {
  static const std::vector<std::string> glmnet{"alpha", "lambda"};
  static const std::vector<std::string> rpart{"cp", "maxdepth", "minbucket", "minsplit"};
  static const std::vector<std::string> xgboost{"nrounds",   "eta",          "lambda",           "alpha",
                                                "subsample", "booster",      "max_depth",        "min_child_weight",
                                                "colsample_bytree", "colsample_bylevel"};
  switch (algorithm) {
    case HpoAlgorithm::kGlmnet:
      return glmnet;
    case HpoAlgorithm::kRpart:
      return rpart;
    case HpoAlgorithm::kXgboost:
      return xgboost;
  }
  return glmnet;
}

double hpo_transform(HpoAlgorithm algorithm, const std::string& column, const std::string& raw) {
  switch (algorithm) {
    case HpoAlgorithm::kGlmnet:
      if (column == "alpha") return parse_number(column, raw);
      if (column == "lambda") return std::log2(parse_positive(column, raw)) / 10.0;
      break;
    case HpoAlgorithm::kRpart:
      if (column == "cp") return 4.0 * parse_number(column, raw);
      if (column == "maxdepth") return parse_number(column, raw) / 10.0;
      if (column == "minbucket" || column == "minsplit") return parse_number(column, raw) / 20.0;
      break;
    case HpoAlgorithm::kXgboost:
      if (column == "nrounds") return (parse_number(column, raw) - 2000.0) / 1000.0;
      if (column == "eta") return (std::log2(parse_positive(column, raw)) + 5.0) / 2.0;
      if (column == "lambda" || column == "alpha") return std::log2(parse_positive(column, raw)) / 5.0;
      if (column == "subsample") return (parse_number(column, raw) - 0.5) / 2.0;
      if (column == "booster") {
        if (raw == "linear" || raw == "gblinear") return -1.0;
        if (raw == "tree" || raw == "gbtree") return 1.0;
        throw SchemaError("column 'booster': unknown value '" + raw + "'");
      }
      if (column == "min_child_weight") return (parse_number(column, raw) - 50.0) / 20.0;
      if (column == "max_depth" || column == "colsample_bytree" || column == "colsample_bylevel") {
        return parse_number(column, raw);
      }
      break;
  }
  throw SchemaError("unknown column '" + column + "' for " + to_string(algorithm));
}

double hpo_inverse(HpoAlgorithm algorithm, const std::string& column, double t) {
  switch (algorithm) {
    case HpoAlgorithm::kGlmnet:
      if (column == "alpha") return t;
      if (column == "lambda") return std::exp2(10.0 * t);
      break;
    case HpoAlgorithm::kRpart:
      if (column == "cp") return t / 4.0;
      if (column == "maxdepth") return 10.0 * t;
      if (column == "minbucket" || column == "minsplit") return 20.0 * t;
      break;
    case HpoAlgorithm::kXgboost:
      if (column == "nrounds") return 1000.0 * t + 2000.0;
      if (column == "eta") return std::exp2(2.0 * t - 5.0);
      if (column == "lambda" || column == "alpha") return std::exp2(5.0 * t);
      if (column == "subsample") return 2.0 * t + 0.5;
      if (column == "min_child_weight") return 20.0 * t + 50.0;
      if (column == "booster" || column == "max_depth" || column == "colsample_bytree" ||
          column == "colsample_bylevel") {
        return t;
      }
      break;
  }
  throw SchemaError("unknown column '" + column + "' for " + to_string(algorithm));
}

const std::vector<int>& hpo_meta_train_ids() {
  static const std::vector<int> ids{3,    1036, 1038, 1043, 1046, 151, 1176, 1049, 1050, 31,
                                    1570, 37,   4134, 1063, 1067, 44,  1068, 50,   1461, 1462};
  return ids;
}

const std::vector<int>& hpo_meta_test_ids() {
  static const std::vector<int> ids{335, 1489, 1486, 1494, 1504, 1120, 1510, 1479, 1480, 333, 1485, 1487, 334};
  return ids;
}

std::vector<int> HpoTable::available_ids(Split split) const {
  const auto& ids = split == Split::kMetaTrain ? hpo_meta_train_ids() : hpo_meta_test_ids();
  std::vector<int> out;
  for (int id : ids) {
    if (datasets.count(id) != 0) out.push_back(id);
  }
  return out;
}

Box HpoTable::bounding_box() const {
  if (datasets.empty()) throw EmptyData("HpoTable: no datasets");
  Vector lo = Vector::Constant(dim(), std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(dim(), -std::numeric_limits<double>::infinity());
  for (const auto& [id, d] : datasets) {
    lo = lo.cwiseMin(d.x.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(d.x.colwise().maxCoeff().transpose());
  }
  return {lo, hi};
}

Eigen::Index HpoTable::dim() const { return static_cast<Eigen::Index>(hpo_columns(algorithm).size()); }

TaskDataset load_hpo_csv(const std::string& path, HpoAlgorithm algorithm) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": missing header");
  const auto header = split_csv_line(line);
  const auto& columns = hpo_columns(algorithm);
  auto index_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(index_of(c));
  const std::size_t auc_idx = index_of("auc");

  std::vector<std::vector<double>> rows;
  std::vector<double> aucs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " cells");
    }
    std::vector<double> row;
    row.reserve(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const double v = hpo_transform(algorithm, columns[k], cells[idx[k]]);
      if (!std::isfinite(v)) throw SchemaError(path + ": non-finite value in column '" + columns[k] + "'");
      row.push_back(v);
    }
    const double auc = parse_number("auc", cells[auc_idx]);
    if (!(auc >= 0.0 && auc <= 1.0)) throw SchemaError(path + ": auc outside [0, 1]");
    rows.push_back(std::move(row));
    aucs.push_back(auc);
  }
  if (rows.empty()) throw EmptyData(path + ": no rows");
  TaskDataset d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    d.y(static_cast<Eigen::Index>(i)) = aucs[i];
  }
  return d;
}

HpoTable load_hpo_table(const std::string& dir, HpoAlgorithm algorithm) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw SchemaError("not a directory: '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  HpoTable table{algorithm, {}};
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    int id = 0;
    auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), id);
    if (ec != std::errc() || ptr != stem.data() + stem.size() || !is_known_id(id)) {
      throw UnknownDatasetId("'" + f.filename().string() + "' is not a known OpenML dataset id");
    }
    table.datasets.emplace(id, load_hpo_csv(f.string(), algorithm));
  }
  if (table.datasets.empty()) throw EmptyData("no dataset files in '" + dir + "'");
  return table;
}

HpoTask::HpoTask(int dataset_id, TaskDataset rows)
    : dataset_id_(dataset_id), rows_(std::move(rows)), domain_(Matrix(rows_.x)) {
  if (rows_.empty()) throw EmptyData("HpoTask: no rows");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < rows_.size(); ++i) {
    if (rows_.y(i) > rows_.y(best)) best = i;
  }
  best_x_ = rows_.x.row(best).transpose();
  best_value_ = rows_.y(best);
}

double HpoTask::evaluate(const Vector& x) const {
  if (x.size() != rows_.dim()) throw DimensionMismatch("HpoTask::evaluate: wrong input dimension");
  for (Eigen::Index i = 0; i < rows_.size(); ++i) {
    if ((rows_.x.row(i).transpose() - x).cwiseAbs().maxCoeff() <= 1e-12) return rows_.y(i);
  }
  throw NotInDomain("dataset " + std::to_string(dataset_id_) + ": point is not a table row");
}

std::vector<std::pair<std::string, double>> HpoTask::parameters() const {
  return {{"dataset_id", static_cast<double>(dataset_id_)}, {"rows", static_cast<double>(rows_.size())}};
}

std::shared_ptr<const Task> hpo_env_from_table(const HpoTable& table, int dataset_id) {
  const auto it = table.datasets.find(dataset_id);
  if (it == table.datasets.end()) throw UnknownDatasetId("dataset " + std::to_string(dataset_id) + " not in table");
  return std::make_shared<HpoTask>(dataset_id, it->second);
}

std::unique_ptr<Environment> make_hpo_environment(HpoTable table) {
  return std::make_unique<HpoEnvironment>(std::move(table));
}

}  // namespace fpacoh
