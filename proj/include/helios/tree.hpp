#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "helios/core.hpp"
#include "helios/rng.hpp"

namespace helios::trees {

struct TreeParams {
  int max_depth = -1;                   // -1: unlimited
  std::size_t min_samples_leaf = 1;     // row count per side, not weight
  std::size_t features_per_split = 0;   // 0: consider all features
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;  // classification leaves: class probabilities
  double value = 0.0;                // regression leaves
  double impurity_decrease = 0.0;    // internal nodes: weighted decrease (root weight = 1)
};

/// CART tree. Rows with feature <= threshold go left. Classification
/// trees carry leaf class distributions; regression trees carry leaf
/// values (n_classes == 0).
struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t n_classes = 0;

  const TreeNode& leaf_for(const double* row) const;
  int predict_row(const double* row) const;
  double predict_value_row(const double* row) const;
  std::vector<int> predict(const Matrix& x) const;

  /// Sum of impurity_decrease per feature, normalized to sum 1 (all
  /// zeros for a single-leaf tree).
  std::vector<double> feature_importance(std::size_t n_features) const;
};

/// Greedy weighted-Gini CART. Candidate thresholds are midpoints between
/// consecutive distinct sorted values; ties break toward the lower
/// feature index, then the lower threshold. When params.features_per_split
/// is in (0, n_features), each split considers a subsample drawn from
/// `rng` (required in that case).
DecisionTree fit_tree(const Matrix& x, const std::vector<int>& y,
                      const std::vector<double>& weights, std::size_t n_classes,
                      const TreeParams& params, Rng* rng = nullptr);

/// Leaf value from the rows that reached the leaf (used by boosting to
/// install Newton-step values).
using LeafValueFn = std::function<double(const std::vector<std::size_t>&)>;

/// Variance-reduction CART on a continuous target; leaf values default
/// to the weighted mean unless leaf_value is given.
DecisionTree fit_regression_tree(const Matrix& x, const std::vector<double>& y,
                                 const std::vector<double>& weights, const TreeParams& params,
                                 const LeafValueFn& leaf_value = {}, Rng* rng = nullptr);

}  // namespace helios::trees
