#include "helios/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace helios::trees {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = kInf;  // weighted child impurity, lower is better
};

/// Shared recursive builder. Classification when labels != nullptr
/// (impurity = Gini over class weight sums), regression otherwise
/// (impurity = weighted MSE).
class Builder {
 public:
  Builder(const Matrix& x, const std::vector<int>* labels, const std::vector<double>* targets,
          const std::vector<double>& weights, std::size_t n_classes, const TreeParams& params,
          const LeafValueFn* leaf_value, Rng* rng)
      : x_(x),
        labels_(labels),
        targets_(targets),
        weights_(weights),
        n_classes_(n_classes),
        params_(params),
        leaf_value_(leaf_value),
        rng_(rng) {}

  DecisionTree run() {
    std::vector<std::size_t> rows;
    double total = 0.0;
    for (std::size_t i = 0; i < x_.rows; ++i) {
      if (weights_[i] < 0.0) {
        throw std::invalid_argument("tree: negative sample weight");
      }
      if (weights_[i] > 0.0) {
        rows.push_back(i);
        total += weights_[i];
      }
    }
    if (rows.empty()) {
      throw std::invalid_argument("tree: all sample weights are zero");
    }
    root_weight_ = total;
    DecisionTree tree;
    tree.n_classes = n_classes_;
    build(rows, 0);
    tree.nodes = std::move(nodes_);
    return tree;
  }

 private:
  bool classification() const { return labels_ != nullptr; }

  // Gini from class weight sums, or MSE from moment sums.
  double gini(const std::vector<double>& class_w, double total) const {
    double sum_sq = 0.0;
    for (double w : class_w) {
      const double p = w / total;
      sum_sq += p * p;
    }
    return 1.0 - sum_sq;
  }

  double mse(double w, double wy, double wyy) const {
    return (wyy - wy * wy / w) / w;
  }

  double node_impurity(const std::vector<std::size_t>& rows, double total) const {
    if (classification()) {
      std::vector<double> class_w(n_classes_, 0.0);
      for (std::size_t r : rows) class_w[static_cast<std::size_t>((*labels_)[r])] += weights_[r];
      return gini(class_w, total);
    }
    double wy = 0.0, wyy = 0.0;
    for (std::size_t r : rows) {
      const double y = (*targets_)[r];
      wy += weights_[r] * y;
      wyy += weights_[r] * y * y;
    }
    return mse(total, wy, wyy);
  }

  Split best_split(const std::vector<std::size_t>& rows, double total) const {
    std::vector<std::size_t> features(x_.cols);
    std::iota(features.begin(), features.end(), 0);
    if (params_.features_per_split > 0 && params_.features_per_split < x_.cols) {
      if (rng_ == nullptr) {
        throw std::invalid_argument("tree: feature subsampling requires an RNG");
      }
      features = rng_->sample_without_replacement(x_.cols, params_.features_per_split);
    }

    Split best;
    std::vector<std::pair<double, std::size_t>> column(rows.size());
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
    for (std::size_t f : features) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {x_.at(rows[i], f), rows[i]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      if (classification()) {
        scan_classification(column, total, static_cast<int>(f), min_leaf, best);
      } else {
        scan_regression(column, total, static_cast<int>(f), min_leaf, best);
      }
    }
    return best;
  }

  void scan_classification(const std::vector<std::pair<double, std::size_t>>& column, double total,
                           int feature, std::size_t min_leaf, Split& best) const {
    std::vector<double> left_w(n_classes_, 0.0);
    std::vector<double> all_w(n_classes_, 0.0);
    for (const auto& [v, r] : column) all_w[static_cast<std::size_t>((*labels_)[r])] += weights_[r];

    double left_total = 0.0;
    const std::size_t m = column.size();
    for (std::size_t i = 1; i < m; ++i) {
      const auto& [value, row] = column[i - 1];
      left_w[static_cast<std::size_t>((*labels_)[row])] += weights_[row];
      left_total += weights_[row];
      if (column[i].first <= value) continue;  // not a distinct-value boundary
      if (i < min_leaf || m - i < min_leaf) continue;
      const double right_total = total - left_total;
      if (left_total <= 0.0 || right_total <= 0.0) continue;

      double left_sq = 0.0, right_sq = 0.0;
      for (std::size_t c = 0; c < n_classes_; ++c) {
        const double lp = left_w[c] / left_total;
        const double rp = (all_w[c] - left_w[c]) / right_total;
        left_sq += lp * lp;
        right_sq += rp * rp;
      }
      const double score = (left_total / total) * (1.0 - left_sq) +
                           (right_total / total) * (1.0 - right_sq);
      if (score < best.score) {
        best = {feature, (value + column[i].first) / 2.0, score};
      }
    }
  }

  void scan_regression(const std::vector<std::pair<double, std::size_t>>& column, double total,
                       int feature, std::size_t min_leaf, Split& best) const {
    double all_wy = 0.0, all_wyy = 0.0;
    for (const auto& [v, r] : column) {
      const double y = (*targets_)[r];
      all_wy += weights_[r] * y;
      all_wyy += weights_[r] * y * y;
    }

    double left_total = 0.0, left_wy = 0.0, left_wyy = 0.0;
    const std::size_t m = column.size();
    for (std::size_t i = 1; i < m; ++i) {
      const auto& [value, row] = column[i - 1];
      const double y = (*targets_)[row];
      left_total += weights_[row];
      left_wy += weights_[row] * y;
      left_wyy += weights_[row] * y * y;
      if (column[i].first <= value) continue;
      if (i < min_leaf || m - i < min_leaf) continue;
      const double right_total = total - left_total;
      if (left_total <= 0.0 || right_total <= 0.0) continue;

      const double score = (left_total / total) * mse(left_total, left_wy, left_wyy) +
                           (right_total / total) *
                               mse(right_total, all_wy - left_wy, all_wyy - left_wyy);
      if (score < best.score) {
        best = {feature, (value + column[i].first) / 2.0, score};
      }
    }
  }

  int make_leaf(const std::vector<std::size_t>& rows, double total) {
    TreeNode leaf;
    if (classification()) {
      leaf.distribution.assign(n_classes_, 0.0);
      for (std::size_t r : rows) {
        leaf.distribution[static_cast<std::size_t>((*labels_)[r])] += weights_[r];
      }
      for (double& p : leaf.distribution) p /= total;
    } else if (leaf_value_ != nullptr && *leaf_value_) {
      leaf.value = (*leaf_value_)(rows);
    } else {
      double wy = 0.0;
      for (std::size_t r : rows) wy += weights_[r] * (*targets_)[r];
      leaf.value = wy / total;
    }
    nodes_.push_back(std::move(leaf));
    return static_cast<int>(nodes_.size() - 1);
  }

  int build(const std::vector<std::size_t>& rows, int depth) {
    double total = 0.0;
    for (std::size_t r : rows) total += weights_[r];

    const double impurity = node_impurity(rows, total);
    const bool depth_capped = params_.max_depth >= 0 && depth >= params_.max_depth;
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
    if (depth_capped || rows.size() < 2 * min_leaf || impurity <= 1e-12) {
      return make_leaf(rows, total);
    }

    const Split split = best_split(rows, total);
    if (split.feature < 0) {
      return make_leaf(rows, total);
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x_.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left_rows
                                                                            : right_rows)
          .push_back(r);
    }

    TreeNode node;
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.impurity_decrease = (total / root_weight_) * (impurity - split.score);
    nodes_.push_back(std::move(node));
    const int index = static_cast<int>(nodes_.size() - 1);
    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  const Matrix& x_;
  const std::vector<int>* labels_;
  const std::vector<double>* targets_;
  const std::vector<double>& weights_;
  std::size_t n_classes_;
  TreeParams params_;
  const LeafValueFn* leaf_value_;
  Rng* rng_;
  double root_weight_ = 0.0;
  std::vector<TreeNode> nodes_;
};

}  // namespace

const TreeNode& DecisionTree::leaf_for(const double* row) const {
  const TreeNode* node = &nodes[0];
  while (node->feature >= 0) {
    node = row[node->feature] <= node->threshold ? &nodes[static_cast<std::size_t>(node->left)]
                                                 : &nodes[static_cast<std::size_t>(node->right)];
  }
  return *node;
}

int DecisionTree::predict_row(const double* row) const {
  const auto& dist = leaf_for(row).distribution;
  std::size_t best = 0;
  for (std::size_t c = 1; c < dist.size(); ++c) {
    if (dist[c] > dist[best]) best = c;
  }
  return static_cast<int>(best);
}

double DecisionTree::predict_value_row(const double* row) const { return leaf_for(row).value; }

std::vector<int> DecisionTree::predict(const Matrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_row(x.row(r));
  return out;
}

std::vector<double> DecisionTree::feature_importance(std::size_t n_features) const {
  std::vector<double> imp(n_features, 0.0);
  double total = 0.0;
  for (const auto& node : nodes) {
    if (node.feature >= 0) {
      imp[static_cast<std::size_t>(node.feature)] += node.impurity_decrease;
      total += node.impurity_decrease;
    }
  }
  if (total > 0.0) {
    for (double& v : imp) v /= total;
  }
  return imp;
}

DecisionTree fit_tree(const Matrix& x, const std::vector<int>& y,
                      const std::vector<double>& weights, std::size_t n_classes,
                      const TreeParams& params, Rng* rng) {
  if (x.rows == 0) throw std::invalid_argument("tree: empty input");
  if (y.size() != x.rows || weights.size() != x.rows) {
    throw std::invalid_argument("tree: labels/weights length does not match rows");
  }
  if (n_classes < 2) throw std::invalid_argument("tree: n_classes must be >= 2");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= static_cast<int>(n_classes)) {
      throw std::invalid_argument("tree: label out of range at row " + std::to_string(i));
    }
  }
  Builder builder(x, &y, nullptr, weights, n_classes, params, nullptr, rng);
  return builder.run();
}

DecisionTree fit_regression_tree(const Matrix& x, const std::vector<double>& y,
                                 const std::vector<double>& weights, const TreeParams& params,
                                 const LeafValueFn& leaf_value, Rng* rng) {
  if (x.rows == 0) throw std::invalid_argument("tree: empty input");
  if (y.size() != x.rows || weights.size() != x.rows) {
    throw std::invalid_argument("tree: targets/weights length does not match rows");
  }
  Builder builder(x, nullptr, &y, weights, 0, params, &leaf_value, rng);
  return builder.run();
}

}  // namespace helios::trees
