#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "helios/dataset.hpp"
#include "helios/ensemble.hpp"

namespace helios::features {

/// Random-forest feature ranking: per-tree mean decrease in impurity,
/// averaged over the forest and normalized to sum 1.
struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> importances;  // non-negative, sums to 1
  std::size_t n_trees = 0;
  std::uint64_t seed = 0;

  /// Feature indices in descending importance (ties: lower index first).
  std::vector<std::size_t> ranking() const;
};

ImportanceReport fit_importance(const data::LabeledDataset& train, std::size_t n_trees,
                                std::uint64_t seed);

/// Top-k features by importance, reordered back to original column
/// order; ties break toward the earlier column. k == n gives the
/// identity selection.
std::vector<std::size_t> select_features(const ImportanceReport& report, std::size_t k);

/// A copy of the dataset restricted to the given feature columns (in the
/// given order).
data::LabeledDataset restrict_features(const data::LabeledDataset& ds,
                                       const std::vector<std::size_t>& columns);

/// JSON: {features, importances, n_trees, seed}.
void save_report(const ImportanceReport& report, const std::filesystem::path& path);
ImportanceReport load_report(const std::filesystem::path& path);

}  // namespace helios::features
