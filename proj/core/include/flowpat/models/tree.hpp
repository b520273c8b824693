#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "flowpat/matrix.hpp"

namespace flowpat::models {

struct TreeConfig {
  std::optional<std::size_t> max_depth;   // nullopt = unbounded
  std::size_t min_samples_split = 2;
  // 0 = use all features; otherwise the number of features examined per
  // node (random forests pass ceil(sqrt(d))).
  std::size_t features_per_split = 0;
};

// CART classifier: Gini impurity, best threshold over candidate features,
// leaves labelled by majority (ties to the lowest class code).
class DecisionTree {
 public:
  void fit(const Matrix& x, const std::vector<int>& y, const TreeConfig& cfg = {},
           std::uint64_t seed = 0);

  int predict(std::span<const double> row) const;
  std::vector<int> predict(const Matrix& x) const;

  double training_accuracy(const Matrix& x, const std::vector<int>& y) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

 private:
  struct TreeNode {
    // leaf when left < 0
    int left = -1;
    int right = -1;
    std::uint32_t feature = 0;
    double threshold = 0.0;
    int label = 0;
  };
  std::vector<TreeNode> nodes_;
  int num_classes_ = 0;

  friend class RandomForest;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  // 0 = ceil(sqrt(n_features))
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  std::optional<std::size_t> max_depth;
};

// Bagged CART trees; majority vote with deterministic ties (lowest class
// code). Per-tree seeds derive from the fit seed, so tree fitting can run in
// parallel without changing the model.
class RandomForest {
 public:
  void fit(const Matrix& x, const std::vector<int>& y,
           const ForestConfig& cfg = {}, std::uint64_t seed = 0);

  int predict(std::span<const double> row) const;
  std::vector<int> predict(const Matrix& x) const;
  // One prediction per tree; the vote-counting oracle in the tests consumes
  // this directly.
  std::vector<int> per_tree_predictions(std::span<const double> row) const;

  std::size_t tree_count() const { return trees_.size(); }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<DecisionTree> trees_;
  int num_classes_ = 0;
};

}  // namespace flowpat::models
