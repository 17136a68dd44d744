#include "helios/features.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace helios::features {

std::vector<std::size_t> ImportanceReport::ranking() const {
  std::vector<std::size_t> order(importances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
    return importances[a] > importances[b];
  });
  return order;
}

ImportanceReport fit_importance(const data::LabeledDataset& train, std::size_t n_trees,
                                std::uint64_t seed) {
  train.validate();
  if (train.size() == 0) throw std::invalid_argument("features: empty training set");
  if (n_trees < 1) throw std::invalid_argument("features: n_trees must be >= 1");
  {
    std::set<int> distinct(train.labels.begin(), train.labels.end());
    if (distinct.size() < 2) {
      throw std::invalid_argument("features: training labels are single-class");
    }
  }

  trees::RandomForestParams params;  // defaults: 100 trees handled by caller's n_trees
  params.n_trees = n_trees;
  const trees::EnsembleModel forest = trees::fit_random_forest(
      train.features, train.labels, train.binning.n_classes, params, seed);

  ImportanceReport report;
  report.feature_names = train.feature_names;
  report.n_trees = n_trees;
  report.seed = seed;
  report.importances.assign(train.n_features(), 0.0);
  for (const auto& tree : forest.trees) {
    const auto imp = tree.feature_importance(train.n_features());
    for (std::size_t f = 0; f < imp.size(); ++f) {
      report.importances[f] += imp[f] / static_cast<double>(n_trees);
    }
  }
  double total = 0.0;
  for (double v : report.importances) total += v;
  if (total > 0.0) {
    for (double& v : report.importances) v /= total;
  }
  return report;
}

std::vector<std::size_t> select_features(const ImportanceReport& report, std::size_t k) {
  const std::size_t n = report.importances.size();
  if (k < 1 || k > n) {
    throw std::invalid_argument("features: k must lie in [1, " + std::to_string(n) + "]");
  }
  auto order = report.ranking();
  order.resize(k);
  std::sort(order.begin(), order.end());  // back to original column order
  return order;
}

data::LabeledDataset restrict_features(const data::LabeledDataset& ds,
                                       const std::vector<std::size_t>& columns) {
  if (columns.empty()) {
    throw std::invalid_argument("features: column selection is empty");
  }
  for (std::size_t c : columns) {
    if (c >= ds.n_features()) {
      throw std::invalid_argument("features: column index " + std::to_string(c) +
                                  " out of range");
    }
  }
  data::LabeledDataset out = ds;
  out.features = ds.features.select_cols(columns);
  out.feature_names.clear();
  out.standardizer.mean.clear();
  out.standardizer.stddev.clear();
  out.standardizer.floored_columns.clear();
  for (std::size_t c : columns) {
    out.feature_names.push_back(ds.feature_names[c]);
    out.standardizer.mean.push_back(ds.standardizer.mean[c]);
    out.standardizer.stddev.push_back(ds.standardizer.stddev[c]);
  }
  out.validate();
  return out;
}

void save_report(const ImportanceReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["features"] = report.feature_names;
  j["importances"] = report.importances;
  j["n_trees"] = report.n_trees;
  j["seed"] = report.seed;
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("features: cannot write " + path.string());
  }
  out << j.dump(2) << "\n";
}

ImportanceReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("features: cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("features: " + path.string() + " is not valid JSON: " + e.what());
  }
  ImportanceReport report;
  report.feature_names = j.at("features").get<std::vector<std::string>>();
  report.importances = j.at("importances").get<std::vector<double>>();
  report.n_trees = j.at("n_trees").get<std::size_t>();
  report.seed = j.at("seed").get<std::uint64_t>();
  if (report.feature_names.size() != report.importances.size()) {
    throw std::runtime_error("features: report name/importance lengths differ");
  }
  return report;
}

}  // namespace helios::features
