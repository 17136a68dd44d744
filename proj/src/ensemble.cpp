#include "helios/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace helios::trees {
namespace {

void check_classification_input(const Matrix& x, const std::vector<int>& y,
                                std::size_t n_classes) {
  if (x.rows == 0) throw std::invalid_argument("ensemble: empty input");
  if (y.size() != x.rows) throw std::invalid_argument("ensemble: labels do not match rows");
  if (n_classes < 2) throw std::invalid_argument("ensemble: n_classes must be >= 2");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= static_cast<int>(n_classes)) {
      throw std::invalid_argument("ensemble: label out of range at row " + std::to_string(i));
    }
  }
}

std::vector<double> softmax_row(const std::vector<double>& scores) {
  double peak = scores[0];
  for (double s : scores) peak = std::max(peak, s);
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - peak);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

std::string kind_name(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::RandomForest: return "rf";
    case EnsembleKind::AdaBoost: return "adaboost";
    case EnsembleKind::GradientBoosting: return "gbm";
  }
  throw std::logic_error("ensemble: bad kind");
}

EnsembleKind kind_from(const std::string& name) {
  if (name == "rf") return EnsembleKind::RandomForest;
  if (name == "adaboost") return EnsembleKind::AdaBoost;
  if (name == "gbm") return EnsembleKind::GradientBoosting;
  throw ConfigError("ensemble: unknown kind '" + name + "' (expected rf, adaboost, or gbm)");
}

std::vector<double> EnsembleModel::predict_proba_row(const double* row) const {
  std::vector<double> out(n_classes, 0.0);
  switch (kind) {
    case EnsembleKind::RandomForest: {
      for (const auto& tree : trees) {
        const auto& dist = tree.leaf_for(row).distribution;
        for (std::size_t c = 0; c < n_classes; ++c) out[c] += dist[c];
      }
      for (double& v : out) v /= static_cast<double>(trees.size());
      return out;
    }
    case EnsembleKind::AdaBoost: {
      double total = 0.0;
      for (std::size_t t = 0; t < trees.size(); ++t) {
        out[static_cast<std::size_t>(trees[t].predict_row(row))] += tree_weights[t];
        total += tree_weights[t];
      }
      if (total > 0.0) {
        for (double& v : out) v /= total;
      }
      return out;
    }
    case EnsembleKind::GradientBoosting: {
      std::vector<double> scores = init_scores;
      const std::size_t rounds = trees.size() / n_classes;
      for (std::size_t r = 0; r < rounds; ++r) {
        for (std::size_t c = 0; c < n_classes; ++c) {
          scores[c] += learning_rate * trees[r * n_classes + c].predict_value_row(row);
        }
      }
      return softmax_row(scores);
    }
  }
  throw std::logic_error("ensemble: bad kind");
}

int EnsembleModel::predict_row(const double* row) const {
  const auto p = predict_proba_row(row);
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = c;
  }
  return static_cast<int>(best);
}

std::vector<int> EnsembleModel::predict(const Matrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_row(x.row(r));
  return out;
}

Matrix EnsembleModel::predict_proba(const Matrix& x) const {
  Matrix out(x.rows, n_classes);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto p = predict_proba_row(x.row(r));
    std::copy(p.begin(), p.end(), out.row(r));
  }
  return out;
}

double EnsembleModel::accuracy(const Matrix& x, const std::vector<int>& y) const {
  const auto pred = predict(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (pred[i] == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

EnsembleModel fit_random_forest(const Matrix& x, const std::vector<int>& y,
                                std::size_t n_classes, const RandomForestParams& params,
                                std::uint64_t seed) {
  check_classification_input(x, y, n_classes);
  if (params.n_trees < 1) throw std::invalid_argument("rf: n_trees must be >= 1");

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  if (params.subsample_features) {
    tree_params.features_per_split = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols))));
  }

  EnsembleModel model;
  model.kind = EnsembleKind::RandomForest;
  model.n_classes = n_classes;
  model.seed = seed;
  model.hyperparameters = {{"n_trees", std::to_string(params.n_trees)},
                           {"max_depth", std::to_string(params.max_depth)},
                           {"min_samples_leaf", std::to_string(params.min_samples_leaf)},
                           {"bootstrap", params.bootstrap ? "true" : "false"},
                           {"subsample_features", params.subsample_features ? "true" : "false"}};

  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, 0x7266, t));  // "rf"
    std::vector<double> weights;
    if (params.bootstrap) {
      weights.assign(x.rows, 0.0);
      for (std::size_t i = 0; i < x.rows; ++i) weights[rng.index(x.rows)] += 1.0;
    } else {
      weights.assign(x.rows, 1.0);
    }
    model.trees.push_back(fit_tree(x, y, weights, n_classes, tree_params, &rng));
  }
  return model;
}

EnsembleModel fit_adaboost(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                           const AdaBoostParams& params, std::uint64_t seed,
                           AdaBoostFitInfo* info) {
  check_classification_input(x, y, n_classes);
  if (params.n_rounds < 1) throw std::invalid_argument("adaboost: n_rounds must be >= 1");

  EnsembleModel model;
  model.kind = EnsembleKind::AdaBoost;
  model.n_classes = n_classes;
  model.seed = seed;
  model.hyperparameters = {{"n_rounds", std::to_string(params.n_rounds)}, {"depth", "1"}};

  const std::size_t n = x.rows;
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  TreeParams stump_params;
  stump_params.max_depth = 1;

  const double k = static_cast<double>(n_classes);
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    DecisionTree stump = fit_tree(x, y, weights, n_classes, stump_params);
    const auto pred = stump.predict(x);

    double err = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += weights[i];
      if (pred[i] != y[i]) err += weights[i];
    }
    err /= total;

    if (err == 0.0) {  // perfect stump: keep it and stop
      model.trees.push_back(std::move(stump));
      model.tree_weights.push_back(1.0);
      if (info != nullptr) info->staged_train_error.push_back(0.0);
      break;
    }
    if (err >= 1.0 - 1.0 / k) {  // no better than chance: discard and stop
      break;
    }

    const double alpha = std::log((1.0 - err) / err) + std::log(k - 1.0);
    model.trees.push_back(std::move(stump));
    model.tree_weights.push_back(alpha);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred[i] != y[i]) weights[i] *= std::exp(alpha);
      sum += weights[i];
    }
    for (double& w : weights) w /= sum;

    if (info != nullptr) {
      info->staged_train_error.push_back(1.0 - model.accuracy(x, y));
    }
  }

  if (model.trees.empty()) {
    throw std::runtime_error("adaboost: first stump was no better than chance");
  }
  return model;
}

EnsembleModel fit_gradient_boosting(const Matrix& x, const std::vector<int>& y,
                                    std::size_t n_classes, const GbmParams& params,
                                    std::uint64_t seed, GbmFitInfo* info) {
  check_classification_input(x, y, n_classes);
  if (params.n_rounds < 1) throw std::invalid_argument("gbm: n_rounds must be >= 1");
  if (params.learning_rate < 0.0) {
    throw std::invalid_argument("gbm: learning_rate must be non-negative");
  }

  EnsembleModel model;
  model.kind = EnsembleKind::GradientBoosting;
  model.n_classes = n_classes;
  model.seed = seed;
  model.learning_rate = params.learning_rate;
  model.hyperparameters = {{"n_rounds", std::to_string(params.n_rounds)},
                           {"learning_rate", format_double(params.learning_rate)},
                           {"max_depth", std::to_string(params.max_depth)},
                           {"min_samples_leaf", std::to_string(params.min_samples_leaf)}};

  const std::size_t n = x.rows;
  const double k = static_cast<double>(n_classes);

  model.init_scores.assign(n_classes, 0.0);
  {
    std::vector<double> prior(n_classes, 0.0);
    for (int label : y) prior[static_cast<std::size_t>(label)] += 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < n_classes; ++c) {
      model.init_scores[c] = std::log(std::max(prior[c], 1e-12));
    }
  }

  // scores[i*K + c] = F_c(x_i)
  std::vector<double> scores(n * n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.init_scores.begin(), model.init_scores.end(),
              scores.begin() + static_cast<std::ptrdiff_t>(i * n_classes));
  }

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  const std::vector<double> unit_weights(n, 1.0);

  std::vector<double> probs(n * n_classes);
  std::vector<double> residual(n);
  auto update_probs = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double peak = scores[i * n_classes];
      for (std::size_t c = 1; c < n_classes; ++c) {
        peak = std::max(peak, scores[i * n_classes + c]);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        probs[i * n_classes + c] = std::exp(scores[i * n_classes + c] - peak);
        sum += probs[i * n_classes + c];
      }
      for (std::size_t c = 0; c < n_classes; ++c) probs[i * n_classes + c] /= sum;
    }
  };
  auto mean_deviance = [&] {
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dev -= std::log(std::max(probs[i * n_classes + static_cast<std::size_t>(y[i])], 1e-15));
    }
    return dev / static_cast<double>(n);
  };

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    update_probs();
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double onehot = y[i] == static_cast<int>(c) ? 1.0 : 0.0;
        residual[i] = onehot - probs[i * n_classes + c];
      }
      // Newton step per leaf: ((K-1)/K) * sum(r) / sum(|r| * (1 - |r|)).
      LeafValueFn leaf_value = [&residual, k](const std::vector<std::size_t>& rows) {
        double num = 0.0, den = 0.0;
        for (std::size_t r : rows) {
          num += residual[r];
          den += std::abs(residual[r]) * (1.0 - std::abs(residual[r]));
        }
        if (den < 1e-12) return 0.0;
        return (k - 1.0) / k * num / den;
      };
      DecisionTree tree = fit_regression_tree(x, residual, unit_weights, tree_params, leaf_value);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i * n_classes + c] += params.learning_rate * tree.predict_value_row(x.row(i));
      }
      model.trees.push_back(std::move(tree));
    }
    if (info != nullptr) {
      update_probs();
      info->staged_deviance.push_back(mean_deviance());
    }
  }
  return model;
}

namespace {

nlohmann::json tree_to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json j;
    j["feature"] = n.feature;
    if (n.feature >= 0) {
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
      j["impurity_decrease"] = n.impurity_decrease;
    } else if (tree.n_classes > 0) {
      j["distribution"] = n.distribution;
    } else {
      j["value"] = n.value;
    }
    nodes.push_back(std::move(j));
  }
  return {{"n_classes", tree.n_classes}, {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree tree;
  tree.n_classes = j.at("n_classes").get<std::size_t>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode node;
    node.feature = jn.at("feature").get<int>();
    if (node.feature >= 0) {
      node.threshold = jn.at("threshold").get<double>();
      node.left = jn.at("left").get<int>();
      node.right = jn.at("right").get<int>();
      node.impurity_decrease = jn.at("impurity_decrease").get<double>();
    } else if (tree.n_classes > 0) {
      node.distribution = jn.at("distribution").get<std::vector<double>>();
    } else {
      node.value = jn.at("value").get<double>();
    }
    tree.nodes.push_back(std::move(node));
  }
  if (tree.nodes.empty()) {
    throw std::runtime_error("ensemble: tree with no nodes");
  }
  return tree;
}

}  // namespace

void save_ensemble(const EnsembleModel& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format_version"] = "1";
  j["kind"] = kind_name(model.kind);
  j["n_classes"] = model.n_classes;
  j["seed"] = model.seed;
  j["learning_rate"] = model.learning_rate;
  j["tree_weights"] = model.tree_weights;
  j["init_scores"] = model.init_scores;
  j["hyperparameters"] = model.hyperparameters;
  j["trees"] = nlohmann::json::array();
  for (const auto& tree : model.trees) j["trees"].push_back(tree_to_json(tree));

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("ensemble: cannot write " + path.string());
  }
  out << j.dump() << "\n";
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("ensemble: cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("ensemble: " + path.string() + " is not valid JSON: " + e.what());
  }
  const auto version = j.at("format_version").get<std::string>();
  if (version != "1") {
    throw std::runtime_error("ensemble: unsupported format version '" + version + "'");
  }
  EnsembleModel model;
  model.kind = kind_from(j.at("kind").get<std::string>());
  model.n_classes = j.at("n_classes").get<std::size_t>();
  model.seed = j.at("seed").get<std::uint64_t>();
  model.learning_rate = j.at("learning_rate").get<double>();
  model.tree_weights = j.at("tree_weights").get<std::vector<double>>();
  model.init_scores = j.at("init_scores").get<std::vector<double>>();
  model.hyperparameters = j.at("hyperparameters").get<std::map<std::string, std::string>>();
  for (const auto& jt : j.at("trees")) model.trees.push_back(tree_from_json(jt));
  if (model.trees.empty()) {
    throw std::runtime_error("ensemble: no trees in " + path.string());
  }
  return model;
}

}  // namespace helios::trees
