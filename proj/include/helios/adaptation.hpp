#pragma once

#include <cstdint>
#include <string>

#include "helios/checkpoint.hpp"
#include "helios/metrics.hpp"
#include "helios/training.hpp"

namespace helios::adapt {

enum class AdaptScope { Partial, Full };

std::string scope_name(AdaptScope scope);
AdaptScope scope_from(const std::string& name);  // "partial" | "full"

struct AdaptConfig {
  AdaptScope scope = AdaptScope::Partial;
  double lr = 1e-4;
  std::size_t batch_size = 1000;
  int max_epochs = 300;
  int patience = 20;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Refit the input standardizer on target training data (the default
  /// per-domain pipeline). When false the source statistics are kept.
  bool refit_standardizer = true;

  void validate() const;
};

/// Sets the trainable mask: Partial leaves exactly the final two FC
/// layers (weights and biases) trainable, Full everything. BN running
/// statistics are frozen under adaptation in both scopes — adaptation
/// forwards normalize with the stored statistics.
void apply_freeze(model::Model& model, AdaptScope scope);

struct AdaptResult {
  model::ModelCheckpoint checkpoint;
  train::RunTrace trace;  // mode adapt-partial | adapt-full
};

/// Source-free adaptation: the only inputs are the transferred checkpoint
/// and labeled target data. Optimizes cross-entropy over the unfrozen
/// parameters, keeping the best-validation-accuracy snapshot.
AdaptResult adapt(const model::ModelCheckpoint& checkpoint, const data::LabeledDataset& target_train,
                  const data::LabeledDataset& target_val, const AdaptConfig& cfg);

/// The "without adaptation" arm: metrics of the raw checkpoint on target
/// data, standardized with the checkpoint's stored (source) statistics.
eval::Metrics evaluate_transfer(const model::ModelCheckpoint& checkpoint,
                                const data::LabeledDataset& target_test);

}  // namespace helios::adapt
