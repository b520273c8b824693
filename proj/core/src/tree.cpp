#include "flowpat/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowpat/errors.hpp"
#include "flowpat/rng.hpp"

namespace flowpat::models {

namespace {

int majority_label(const std::vector<std::size_t>& counts) {
  std::size_t best = 0;
  int label = 0;
  for (int c = 0; c < static_cast<int>(counts.size()); ++c)
    if (counts[c] > best) {
      best = counts[c];
      label = c;  // first max wins -> lowest class code on ties
    }
  return label;
}

double gini_from_counts(const std::vector<std::size_t>& counts, double n) {
  double g = 1.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / n;
    g -= p * p;
  }
  return g;
}

struct Builder {
  const Matrix& x;
  const std::vector<int>& y;
  int num_classes;
  TreeConfig cfg;
  Rng rng;
  std::vector<int> nodes_left, nodes_right;
  std::vector<std::uint32_t> nodes_feature;
  std::vector<double> nodes_threshold;
  std::vector<int> nodes_label;

  int add_node() {
    nodes_left.push_back(-1);
    nodes_right.push_back(-1);
    nodes_feature.push_back(0);
    nodes_threshold.push_back(0.0);
    nodes_label.push_back(0);
    return static_cast<int>(nodes_left.size()) - 1;
  }

  // Candidate features per node: all when features_per_split == 0, else a
  // partial Fisher-Yates draw without replacement.
  std::vector<std::uint32_t> candidate_features() {
    const std::size_t d = x.cols;
    if (cfg.features_per_split == 0 || cfg.features_per_split >= d) {
      std::vector<std::uint32_t> all(d);
      std::iota(all.begin(), all.end(), 0u);
      return all;
    }
    std::vector<std::uint32_t> pool(d);
    std::iota(pool.begin(), pool.end(), 0u);
    std::vector<std::uint32_t> out;
    out.reserve(cfg.features_per_split);
    for (std::size_t i = 0; i < cfg.features_per_split; ++i) {
      const std::size_t j = i + rng.uniform_below(d - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  int build(std::vector<std::uint32_t>& idx, std::size_t depth) {
    const int node = add_node();
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (std::uint32_t i : idx) ++counts[static_cast<std::size_t>(y[i])];
    nodes_label[node] = majority_label(counts);

    const double n = static_cast<double>(idx.size());
    const bool pure =
        *std::max_element(counts.begin(), counts.end()) == idx.size();
    if (pure || idx.size() < cfg.min_samples_split ||
        (cfg.max_depth && depth >= *cfg.max_depth))
      return node;

    const double parent_gini = gini_from_counts(counts, n);
    double best_score = parent_gini - 1e-12;  // must strictly improve
    std::uint32_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;

    std::vector<std::pair<double, int>> vals(idx.size());
    std::vector<std::size_t> left_counts(counts.size());
    for (std::uint32_t f : candidate_features()) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        vals[i] = {x.at(idx[i], f), y[idx[i]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;

      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::vector<std::size_t> right_counts = counts;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const auto cls = static_cast<std::size_t>(vals[i].second);
        ++left_counts[cls];
        --right_counts[cls];
        if (vals[i].first == vals[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double score = (nl / n) * gini_from_counts(left_counts, nl) +
                             (nr / n) * gini_from_counts(right_counts, nr);
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          // Midpoint threshold; send values <= threshold left.
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          found = true;
        }
      }
    }
    if (!found) return node;  // all candidate features constant

    std::vector<std::uint32_t> left_idx, right_idx;
    for (std::uint32_t i : idx) {
      if (x.at(i, best_feature) <= best_threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return node;

    idx.clear();
    idx.shrink_to_fit();
    nodes_feature[node] = best_feature;
    nodes_threshold[node] = best_threshold;
    nodes_left[node] = build(left_idx, depth + 1);
    nodes_right[node] = build(right_idx, depth + 1);
    return node;
  }
};

}  // namespace

void DecisionTree::fit(const Matrix& x, const std::vector<int>& y,
                       const TreeConfig& cfg, std::uint64_t seed) {
  if (x.rows == 0 || x.rows != y.size())
    throw ConfigError("tree fit: empty data or label count mismatch");
  num_classes_ = *std::max_element(y.begin(), y.end()) + 1;
  Builder b{x, y, num_classes_, cfg, Rng(seed), {}, {}, {}, {}, {}};
  std::vector<std::uint32_t> idx(x.rows);
  std::iota(idx.begin(), idx.end(), 0u);
  b.build(idx, 0);
  nodes_.resize(b.nodes_left.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    nodes_[i] = {b.nodes_left[i], b.nodes_right[i], b.nodes_feature[i],
                 b.nodes_threshold[i], b.nodes_label[i]};
}

int DecisionTree::predict(std::span<const double> row) const {
  if (nodes_.empty()) throw ConfigError("tree predict: model not fitted");
  int n = 0;
  while (nodes_[static_cast<std::size_t>(n)].left >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(n)];
    n = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes_[static_cast<std::size_t>(n)].label;
}

std::vector<int> DecisionTree::predict(const Matrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row_span(i));
  return out;
}

double DecisionTree::training_accuracy(const Matrix& x,
                                       const std::vector<int>& y) const {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.rows; ++i)
    if (predict(x.row_span(i)) == y[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(x.rows);
}

std::size_t DecisionTree::leaf_count() const {
  std::size_t n = 0;
  for (const auto& nd : nodes_)
    if (nd.left < 0) ++n;
  return n;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& nd : nodes_)
    nodes.push_back({{"l", nd.left},
                     {"r", nd.right},
                     {"f", nd.feature},
                     {"t", nd.threshold},
                     {"c", nd.label}});
  return {{"num_classes", num_classes_}, {"nodes", nodes}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  t.num_classes_ = j.at("num_classes").get<int>();
  for (const auto& nd : j.at("nodes"))
    t.nodes_.push_back({nd.at("l").get<int>(), nd.at("r").get<int>(),
                        nd.at("f").get<std::uint32_t>(),
                        nd.at("t").get<double>(), nd.at("c").get<int>()});
  return t;
}

void RandomForest::fit(const Matrix& x, const std::vector<int>& y,
                       const ForestConfig& cfg, std::uint64_t seed) {
  if (cfg.n_trees == 0) throw ConfigError("forest fit: n_trees must be >= 1");
  if (x.rows == 0 || x.rows != y.size())
    throw ConfigError("forest fit: empty data or label count mismatch");
  num_classes_ = *std::max_element(y.begin(), y.end()) + 1;

  TreeConfig tree_cfg;
  tree_cfg.max_depth = cfg.max_depth;
  tree_cfg.features_per_split =
      cfg.features_per_split != 0
          ? cfg.features_per_split
          : static_cast<std::size_t>(
                std::ceil(std::sqrt(static_cast<double>(x.cols))));

  trees_.assign(cfg.n_trees, DecisionTree{});
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(seed, {0xF0E5, t});
    if (cfg.bootstrap) {
      Rng rng(derive_seed(tree_seed, {0xB007}));
      Matrix bx(x.rows, x.cols);
      std::vector<int> by(x.rows);
      for (std::size_t i = 0; i < x.rows; ++i) {
        const std::size_t j = rng.uniform_below(x.rows);
        std::copy(x.row(j), x.row(j) + x.cols, bx.row(i));
        by[i] = y[j];
      }
      trees_[t].fit(bx, by, tree_cfg, tree_seed);
    } else {
      trees_[t].fit(x, y, tree_cfg, tree_seed);
    }
    // Trees may label fewer classes than the forest saw overall.
    trees_[t].num_classes_ = num_classes_;
  }
}

std::vector<int> RandomForest::per_tree_predictions(
    std::span<const double> row) const {
  std::vector<int> out(trees_.size());
  for (std::size_t t = 0; t < trees_.size(); ++t)
    out[t] = trees_[t].predict(row);
  return out;
}

int RandomForest::predict(std::span<const double> row) const {
  if (trees_.empty()) throw ConfigError("forest predict: model not fitted");
  std::vector<std::size_t> votes(static_cast<std::size_t>(num_classes_), 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(row))];
  return majority_label(votes);
}

std::vector<int> RandomForest::predict(const Matrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row_span(i));
  return out;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"num_classes", num_classes_}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f;
  f.num_classes_ = j.at("num_classes").get<int>();
  for (const auto& t : j.at("trees"))
    f.trees_.push_back(DecisionTree::from_json(t));
  return f;
}

}  // namespace flowpat::models
