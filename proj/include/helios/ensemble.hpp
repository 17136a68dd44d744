#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "helios/core.hpp"
#include "helios/tree.hpp"

namespace helios::trees {

enum class EnsembleKind { RandomForest, AdaBoost, GradientBoosting };

std::string kind_name(EnsembleKind kind);
EnsembleKind kind_from(const std::string& name);  // rf | adaboost | gbm

struct RandomForestParams {
  std::size_t n_trees = 100;
  int max_depth = -1;
  std::size_t min_samples_leaf = 1;
  bool bootstrap = true;
  bool subsample_features = true;  // sqrt(n_features) per split
};

struct AdaBoostParams {
  std::size_t n_rounds = 100;  // depth-1 stumps (SAMME)
};

struct GbmParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

/// Fitted tree ensemble. Tree layout depends on kind: one tree per
/// round for RF/AdaBoost; GBM stores n_rounds * n_classes regression
/// trees, round-major (round r, class c at index r * n_classes + c).
struct EnsembleModel {
  EnsembleKind kind = EnsembleKind::RandomForest;
  std::size_t n_classes = 0;
  std::vector<DecisionTree> trees;
  std::vector<double> tree_weights;  // AdaBoost round weights (alpha)
  std::vector<double> init_scores;   // GBM per-class log-prior
  double learning_rate = 0.0;        // GBM shrinkage
  std::uint64_t seed = 0;
  std::map<std::string, std::string> hyperparameters;

  std::vector<double> predict_proba_row(const double* row) const;
  int predict_row(const double* row) const;
  std::vector<int> predict(const Matrix& x) const;
  Matrix predict_proba(const Matrix& x) const;

  double accuracy(const Matrix& x, const std::vector<int>& y) const;
};

/// Bootstrap-resampled trees with per-split feature subsampling;
/// prediction averages leaf class distributions.
EnsembleModel fit_random_forest(const Matrix& x, const std::vector<int>& y,
                                std::size_t n_classes, const RandomForestParams& params,
                                std::uint64_t seed);

struct AdaBoostFitInfo {
  std::vector<double> staged_train_error;  // after each kept round
};

/// SAMME with depth-1 stumps: alpha = ln((1-err)/err) + ln(n_classes-1);
/// a round with err >= 1 - 1/n_classes is discarded and stops the loop,
/// err == 0 keeps the stump and stops.
EnsembleModel fit_adaboost(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                           const AdaBoostParams& params, std::uint64_t seed,
                           AdaBoostFitInfo* info = nullptr);

struct GbmFitInfo {
  std::vector<double> staged_deviance;  // mean multinomial deviance after each round
};

/// Multinomial-deviance boosting: per round, one regression tree per
/// class on softmax residuals, Newton-step leaf values, shrinkage nu.
/// nu == 0 degenerates to the log-prior (prior-argmax predictions).
EnsembleModel fit_gradient_boosting(const Matrix& x, const std::vector<int>& y,
                                    std::size_t n_classes, const GbmParams& params,
                                    std::uint64_t seed, GbmFitInfo* info = nullptr);

/// JSON container, extension `.hsens`; round-trips exactly.
void save_ensemble(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace helios::trees
