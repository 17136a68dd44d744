#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "helios/checkpoint.hpp"
#include "helios/dataset.hpp"
#include "helios/model.hpp"

namespace helios::train {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 1000;
  int max_epochs = 300;
  int patience = 20;  // epochs without val-accuracy improvement before stopping
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;  // lr > 0; batch_size >= 2 (BN); patience >= 1
};

struct EpochRecord {
  int epoch = 0;  // 0-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;  // wall-clock spent in this epoch's optimization loop
  std::size_t iterations = 0;  // optimizer steps this epoch
};

struct RunTrace {
  std::string mode = "scratch";  // scratch | adapt-partial | adapt-full
  std::vector<EpochRecord> records;
  int best_epoch = -1;
  double best_val_acc = 0.0;

  std::size_t total_iterations() const;
  double total_seconds() const;
  /// Optimizer steps per wall-clock second over the whole run.
  double its_per_sec() const;
  std::vector<double> val_accuracies() const;

  /// Columns: epoch, train_loss, train_acc, val_acc, seconds, iterations.
  void save_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  model::ModelCheckpoint checkpoint;
  RunTrace trace;
};

/// Mini-batch Adam on cross-entropy over all parameters. Epoch order is
/// reshuffled each epoch from cfg.seed when cfg.shuffle; the checkpoint
/// keeps the best-validation-accuracy parameters. The last incomplete
/// batch is kept unless it has a single row, in which case it merges
/// into the previous batch (batch statistics need >= 2 rows).
TrainResult train_source(model::Model& model, const data::LabeledDataset& train,
                         const data::LabeledDataset& val, const TrainConfig& cfg);

/// Eval-mode (mean cross-entropy loss, accuracy) over the dataset.
std::pair<double, double> evaluate_epoch(model::Model& model, const data::LabeledDataset& data);

/// Consecutive [start, end) row ranges covering n rows: every range has
/// batch_size rows except the last, which absorbs the remainder and, when
/// the remainder is exactly 1, merges into the previous range.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                              std::size_t batch_size);

namespace detail {

/// Deep copy of parameter values and BN statistics, for best-epoch
/// snapshots.
struct ModelState {
  std::vector<std::vector<double>> params;
  std::vector<nn::RunningStats> bn_stats;
};
ModelState capture(const model::Model& m);
void restore_state(model::Model& m, const ModelState& state);

/// Shared epoch loop for source training and adaptation; the two differ
/// only in BN mode, the trainable mask already set on the model, and the
/// trace tag. Per-epoch `seconds` covers the optimization loop only, so
/// its/sec reflects optimizer-step throughput.
RunTrace run_epochs(model::Model& model, const Matrix& train_x, const std::vector<int>& train_y,
                    const data::LabeledDataset& val, const TrainConfig& cfg,
                    nn::BatchNormMode mode, const std::string& trace_mode, ModelState* best_state);

}  // namespace detail

}  // namespace helios::train
