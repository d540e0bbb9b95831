// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpacoh/dataset.hpp"
#include "fpacoh/environments.hpp"

namespace fpacoh {

enum class HpoAlgorithm { kGlmnet, kRpart, kXgboost };

std::optional<HpoAlgorithm> parse_hpo_algorithm(const std::string& name);
std::string to_string(HpoAlgorithm algorithm);

/// Raw CSV columns of one algorithm, in table order (without `auc`).
const std::vector<std::string>& hpo_columns(HpoAlgorithm algorithm);

/// Forward transform of one raw cell. Throws SchemaError for unknown columns
/// or unparsable values.
double hpo_transform(HpoAlgorithm algorithm, const std::string& column, const std::string& raw);

/// Raw value of a transformed coordinate (booster returns -1 or +1 unchanged).
double hpo_inverse(HpoAlgorithm algorithm, const std::string& column, double transformed);

const std::vector<int>& hpo_meta_train_ids();
const std::vector<int>& hpo_meta_test_ids();

/// Transformed rows grouped by OpenML dataset id.
struct HpoTable {
  HpoAlgorithm algorithm;
  std::map<int, TaskDataset> datasets;

  std::vector<int> available_ids(Split split) const;
  Box bounding_box() const;
  Eigen::Index dim() const;
};

/// Reads every `<dataset_id>.csv` in `dir`. Each file needs the algorithm's
/// columns plus `auc`; extra columns are ignored.
HpoTable load_hpo_table(const std::string& dir, HpoAlgorithm algorithm);

/// Parses one CSV file for a known dataset id.
TaskDataset load_hpo_csv(const std::string& path, HpoAlgorithm algorithm);

/// Task over the finite set of rows of one dataset.
class HpoTask final : public Task {
 public:
  HpoTask(int dataset_id, TaskDataset rows);

  /// Exact row lookup; throws NotInDomain otherwise.
  double evaluate(const Vector& x) const override;
  const Domain& domain() const override { return domain_; }
  double optimum_value() const override { return best_value_; }
  const Vector& optimum_x() const override { return best_x_; }
  double oracle_tolerance() const override { return 0.0; }
  std::vector<std::pair<std::string, double>> parameters() const override;
  int dataset_id() const { return dataset_id_; }

 private:
  int dataset_id_;
  TaskDataset rows_;
  Domain domain_;
  Vector best_x_;
  double best_value_;
};

std::shared_ptr<const Task> hpo_env_from_table(const HpoTable& table, int dataset_id);

std::unique_ptr<Environment> make_hpo_environment(HpoTable table);

}  // namespace fpacoh
