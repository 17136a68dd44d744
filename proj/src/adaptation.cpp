#include "helios/adaptation.hpp"

#include <stdexcept>

namespace helios::adapt {
namespace {

void check_target_against_checkpoint(const data::LabeledDataset& ds,
                                     const model::ModelCheckpoint& ckpt, const char* which) {
  ds.validate();
  if (ds.feature_names != ckpt.feature_names) {
    throw std::invalid_argument(std::string("adapt: ") + which +
                                " feature names do not match the checkpoint's");
  }
  if (ds.binning.n_classes != static_cast<std::size_t>(ckpt.spec.n_classes)) {
    throw std::invalid_argument(std::string("adapt: ") + which + " has " +
                                std::to_string(ds.binning.n_classes) +
                                " classes, checkpoint expects " +
                                std::to_string(ckpt.spec.n_classes));
  }
}

}  // namespace

std::string scope_name(AdaptScope scope) {
  return scope == AdaptScope::Partial ? "partial" : "full";
}

AdaptScope scope_from(const std::string& name) {
  if (name == "partial") return AdaptScope::Partial;
  if (name == "full") return AdaptScope::Full;
  throw ConfigError("adapt: unknown scope '" + name + "' (expected partial or full)");
}

void AdaptConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("adapt: lr must be positive");
  if (batch_size < 2) throw std::invalid_argument("adapt: batch_size must be >= 2");
  if (max_epochs < 1) throw std::invalid_argument("adapt: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("adapt: patience must be >= 1");
}

void apply_freeze(model::Model& model, AdaptScope scope) {
  std::size_t fc_tensors = 0;
  for (const auto& p : model.parameters()) {
    if (p.name.rfind("fc", 0) == 0) ++fc_tensors;
  }
  if (fc_tensors < 4) {
    throw std::invalid_argument("adapt: model lacks the two final FC layers");
  }
  for (auto& p : model.parameters()) {
    const bool is_fc = p.name.rfind("fc1.", 0) == 0 || p.name.rfind("fc2.", 0) == 0;
    p.set_trainable(scope == AdaptScope::Full || is_fc);
  }
}

AdaptResult adapt(const model::ModelCheckpoint& checkpoint,
                  const data::LabeledDataset& target_train,
                  const data::LabeledDataset& target_val, const AdaptConfig& cfg) {
  cfg.validate();
  check_target_against_checkpoint(target_train, checkpoint, "target train");
  check_target_against_checkpoint(target_val, checkpoint, "target val");
  if (target_train.feature_names != target_val.feature_names) {
    throw std::invalid_argument("adapt: target train/val feature names differ");
  }

  model::Model model = model::restore(checkpoint);
  apply_freeze(model, cfg.scope);

  // Input statistics for this run: refit on target train, or keep the
  // source statistics from the checkpoint.
  data::Standardizer stats;
  if (cfg.refit_standardizer) {
    stats = data::fit_standardizer(target_train.raw_features());
    stats.floored_columns.clear();
  } else {
    stats = checkpoint.standardizer;
  }
  const Matrix train_x = target_train.features_standardized_with(stats);

  data::LabeledDataset val = target_val;
  val.features = target_val.features_standardized_with(stats);
  val.standardized = true;
  val.standardizer = stats;

  train::TrainConfig base;
  base.lr = cfg.lr;
  base.batch_size = cfg.batch_size;
  base.max_epochs = cfg.max_epochs;
  base.patience = cfg.patience;
  base.seed = cfg.seed;
  base.shuffle = cfg.shuffle;

  train::detail::ModelState best;
  train::RunTrace trace = train::detail::run_epochs(
      model, train_x, target_train.labels, val, base, nn::BatchNormMode::Running,
      "adapt-" + scope_name(cfg.scope), &best);
  train::detail::restore_state(model, best);

  model::Provenance prov;
  prov.domain_id = checkpoint.provenance.domain_id + "->" + target_train.domain_id + ":" +
                   scope_name(cfg.scope);
  prov.seed = cfg.seed;
  prov.epochs = static_cast<int>(trace.records.size());
  prov.init = checkpoint.provenance.init;

  AdaptResult result;
  result.checkpoint =
      model::snapshot(model, stats, checkpoint.feature_names, target_train.binning, prov);
  result.trace = std::move(trace);
  return result;
}

eval::Metrics evaluate_transfer(const model::ModelCheckpoint& checkpoint,
                                const data::LabeledDataset& target_test) {
  check_target_against_checkpoint(target_test, checkpoint, "target test");
  if (target_test.size() == 0) {
    throw std::invalid_argument("adapt: target test set is empty");
  }

  model::Model model = model::restore(checkpoint);
  const Matrix x = target_test.features_standardized_with(checkpoint.standardizer);
  const std::vector<int> y_pred = model.predict(x);
  eval::Metrics m = eval::compute_metrics(target_test.labels, y_pred,
                                          static_cast<std::size_t>(checkpoint.spec.n_classes));
  m.metadata["source"] = checkpoint.provenance.domain_id;
  m.metadata["target"] = target_test.domain_id;
  m.metadata["arm"] = "no-adapt";
  m.metadata["standardizer"] = "source";
  return m;
}

}  // namespace helios::adapt
