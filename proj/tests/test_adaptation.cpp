#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "helios/adaptation.hpp"
#include "helios/core.hpp"

#include "helpers.hpp"

using namespace helios;
using namespace helios::adapt;

namespace {

model::ArchitectureSpec small_spec(int n_features, int n_classes) {
  model::ArchitectureSpec spec;
  spec.n_features = n_features;
  spec.conv_blocks = {{8, 3, 1, 1}, {8, 3, 1, 1}};
  spec.fc_hidden = 16;
  spec.n_classes = n_classes;
  return spec;
}

model::ModelCheckpoint train_small_source(const data::LabeledDataset& train,
                                          const data::LabeledDataset& val,
                                          std::uint64_t seed) {
  model::Model m(small_spec(static_cast<int>(train.n_features()),
                            static_cast<int>(train.binning.n_classes)),
                 seed);
  train::TrainConfig cfg;
  cfg.lr = 5e-3;
  cfg.batch_size = 32;
  cfg.max_epochs = 40;
  cfg.patience = 40;
  cfg.seed = seed;
  return train::train_source(m, train, val, cfg).checkpoint;
}

/// Affine covariate shift: every feature becomes scale*x + offset. The
/// standardizer stays identity, so raw and standardized views agree.
data::LabeledDataset distorted(data::LabeledDataset ds, double scale, double offset) {
  for (auto& v : ds.features.data) v = scale * v + offset;
  return ds;
}

AdaptConfig fast_adapt(AdaptScope scope, std::uint64_t seed) {
  AdaptConfig cfg;
  cfg.scope = scope;
  cfg.lr = 5e-3;
  cfg.batch_size = 32;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.seed = seed;
  return cfg;
}

const std::vector<double>& buffer_named(const model::ModelCheckpoint& ckpt,
                                        const std::string& name) {
  for (const auto& b : ckpt.parameters) {
    if (b.name == name) return b.values;
  }
  throw std::runtime_error("no buffer named " + name);
}

}  // namespace

TEST_CASE("scope names round-trip and reject unknowns") {
  CHECK(scope_name(AdaptScope::Partial) == "partial");
  CHECK(scope_name(AdaptScope::Full) == "full");
  CHECK(scope_from("partial") == AdaptScope::Partial);
  CHECK(scope_from("full") == AdaptScope::Full);
  CHECK_THROWS_AS(scope_from("both"), ConfigError);
  CHECK_THROWS_AS(scope_from(""), ConfigError);
}

TEST_CASE("adapt config validation") {
  AdaptConfig cfg;
  cfg.validate();
  cfg.lr = -1.0;
  CHECK_THROWS(cfg.validate());
  cfg = AdaptConfig{};
  cfg.batch_size = 1;
  CHECK_THROWS(cfg.validate());
  cfg = AdaptConfig{};
  cfg.patience = 0;
  CHECK_THROWS(cfg.validate());
  cfg = AdaptConfig{};
  cfg.max_epochs = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("freeze mask: partial trains exactly the two FC layers") {
  model::Model m(model::ArchitectureSpec{}, 3);
  const std::size_t total = m.parameter_count();
  CHECK(total == 14405);

  apply_freeze(m, AdaptScope::Partial);
  // fc1: 192*64 + 64, fc2: 64*5 + 5.
  CHECK(m.trainable_parameter_count() == 12677);
  for (const auto& p : m.parameters()) {
    const bool is_fc =
        p.name.rfind("fc1.", 0) == 0 || p.name.rfind("fc2.", 0) == 0;
    CHECK(p.trainable == is_fc);
  }

  apply_freeze(m, AdaptScope::Full);
  CHECK(m.trainable_parameter_count() == total);
  for (const auto& p : m.parameters()) CHECK(p.trainable);

  // Partial freeze again: masks are idempotent and reversible.
  apply_freeze(m, AdaptScope::Partial);
  CHECK(m.trainable_parameter_count() == 12677);
}

TEST_CASE("partial adaptation never touches conv or BN buffers") {
  const auto src_train = test::make_blobs(200, 4, 3, 301, 0.25);
  const auto src_val = test::make_blobs(60, 4, 3, 302, 0.25, data::SplitTag::Val);
  const auto ckpt = train_small_source(src_train, src_val, 21);

  auto tgt_train = distorted(test::make_blobs(200, 4, 3, 311, 0.25), 0.8, 1.0);
  auto tgt_val = distorted(test::make_blobs(60, 4, 3, 312, 0.25, data::SplitTag::Val), 0.8, 1.0);
  tgt_train.domain_id = "tgt";
  tgt_val.domain_id = "tgt";

  const auto partial = adapt::adapt(ckpt, tgt_train, tgt_val, fast_adapt(AdaptScope::Partial, 31));
  CHECK(partial.trace.mode == "adapt-partial");
  CHECK(partial.checkpoint.provenance.domain_id == ckpt.provenance.domain_id + "->tgt:partial");

  // Everything upstream of the FC head is bit-identical to the source.
  for (const char* name :
       {"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "bn1.gamma", "bn1.beta",
        "bn2.gamma", "bn2.beta"}) {
    CHECK(buffer_named(partial.checkpoint, name) == buffer_named(ckpt, name));
  }
  // Running statistics are frozen under adaptation.
  REQUIRE(partial.checkpoint.bn_stats.size() == ckpt.bn_stats.size());
  for (std::size_t i = 0; i < ckpt.bn_stats.size(); ++i) {
    CHECK(partial.checkpoint.bn_stats[i].mean == ckpt.bn_stats[i].mean);
    CHECK(partial.checkpoint.bn_stats[i].var == ckpt.bn_stats[i].var);
  }
  // The head did move.
  CHECK(buffer_named(partial.checkpoint, "fc2.weight") != buffer_named(ckpt, "fc2.weight"));

  // Full scope is allowed to move the conv stack but still not BN stats.
  const auto full = adapt::adapt(ckpt, tgt_train, tgt_val, fast_adapt(AdaptScope::Full, 31));
  CHECK(full.trace.mode == "adapt-full");
  for (std::size_t i = 0; i < ckpt.bn_stats.size(); ++i) {
    CHECK(full.checkpoint.bn_stats[i].mean == ckpt.bn_stats[i].mean);
    CHECK(full.checkpoint.bn_stats[i].var == ckpt.bn_stats[i].var);
  }
  CHECK(buffer_named(full.checkpoint, "conv1.weight") != buffer_named(ckpt, "conv1.weight"));
}

TEST_CASE("adaptation recovers accuracy lost to covariate shift") {
  const auto src_train = test::make_blobs(240, 4, 3, 401, 0.25);
  const auto src_val = test::make_blobs(90, 4, 3, 402, 0.25, data::SplitTag::Val);
  const auto ckpt = train_small_source(src_train, src_val, 41);

  // A strong affine distortion: the raw checkpoint sees inputs roughly two
  // standard deviations off its training distribution.
  const double scale = 0.6, offset = 3.0;
  auto tgt_train = distorted(test::make_blobs(240, 4, 3, 411, 0.25), scale, offset);
  auto tgt_val = distorted(test::make_blobs(90, 4, 3, 412, 0.25, data::SplitTag::Val), scale, offset);
  auto tgt_test = distorted(test::make_blobs(90, 4, 3, 413, 0.25, data::SplitTag::Test), scale, offset);
  tgt_train.domain_id = tgt_val.domain_id = tgt_test.domain_id = "shifted";

  const auto before = evaluate_transfer(ckpt, tgt_test);
  const auto result = adapt::adapt(ckpt, tgt_train, tgt_val, fast_adapt(AdaptScope::Partial, 43));
  const auto after = evaluate_transfer(result.checkpoint, tgt_test);

  CHECK(after.accuracy > before.accuracy);
  CHECK(after.accuracy >= 0.85);
  CHECK(before.accuracy <= 0.75);

  // The adapted checkpoint reproduces its own best validation accuracy.
  const auto val_check = evaluate_transfer(result.checkpoint, tgt_val);
  CHECK(val_check.accuracy == doctest::Approx(result.trace.best_val_acc).epsilon(1e-12));
}

TEST_CASE("zero shift: transfer without adaptation already works") {
  const auto src_train = test::make_blobs(240, 4, 3, 501, 0.25);
  const auto src_val = test::make_blobs(90, 4, 3, 502, 0.25, data::SplitTag::Val);
  const auto ckpt = train_small_source(src_train, src_val, 51);

  // Same generating distribution, fresh draw.
  auto twin_test = test::make_blobs(120, 4, 3, 511, 0.25, data::SplitTag::Test);
  twin_test.domain_id = "twin";
  const auto m = evaluate_transfer(ckpt, twin_test);
  CHECK(m.accuracy >= 0.9);
  CHECK(m.metadata.at("arm") == "no-adapt");
  CHECK(m.metadata.at("standardizer") == "source");
  CHECK(m.metadata.at("source") == ckpt.provenance.domain_id);
  CHECK(m.metadata.at("target") == "twin");
  CHECK(m.n_samples == 120);
}

TEST_CASE("standardizer refit honors the toggle") {
  const auto src_train = test::make_blobs(160, 4, 3, 601, 0.25);
  const auto src_val = test::make_blobs(60, 4, 3, 602, 0.25, data::SplitTag::Val);
  const auto ckpt = train_small_source(src_train, src_val, 61);

  auto tgt_train = distorted(test::make_blobs(160, 4, 3, 611, 0.25), 1.0, 2.0);
  auto tgt_val = distorted(test::make_blobs(60, 4, 3, 612, 0.25, data::SplitTag::Val), 1.0, 2.0);
  tgt_train.domain_id = tgt_val.domain_id = "off2";

  auto cfg = fast_adapt(AdaptScope::Partial, 63);
  cfg.max_epochs = 3;
  cfg.patience = 3;

  cfg.refit_standardizer = false;
  const auto kept = adapt::adapt(ckpt, tgt_train, tgt_val, cfg);
  CHECK(kept.checkpoint.standardizer.mean == ckpt.standardizer.mean);
  CHECK(kept.checkpoint.standardizer.stddev == ckpt.standardizer.stddev);

  cfg.refit_standardizer = true;
  const auto refit = adapt::adapt(ckpt, tgt_train, tgt_val, cfg);
  REQUIRE(refit.checkpoint.standardizer.mean.size() == 4);
  // Target features sit near +2 after the offset; the refit statistics see it.
  for (double mu : refit.checkpoint.standardizer.mean) {
    CHECK(mu == doctest::Approx(2.0).epsilon(0.25));
  }
  CHECK(refit.checkpoint.standardizer.mean != ckpt.standardizer.mean);
}

TEST_CASE("adaptation is deterministic for a fixed seed") {
  const auto src_train = test::make_blobs(160, 4, 3, 701, 0.25);
  const auto src_val = test::make_blobs(60, 4, 3, 702, 0.25, data::SplitTag::Val);
  const auto ckpt = train_small_source(src_train, src_val, 71);

  auto tgt_train = distorted(test::make_blobs(160, 4, 3, 711, 0.25), 0.9, 0.7);
  auto tgt_val = distorted(test::make_blobs(60, 4, 3, 712, 0.25, data::SplitTag::Val), 0.9, 0.7);
  tgt_train.domain_id = tgt_val.domain_id = "t";

  auto cfg = fast_adapt(AdaptScope::Partial, 73);
  cfg.max_epochs = 8;
  const auto r1 = adapt::adapt(ckpt, tgt_train, tgt_val, cfg);
  const auto r2 = adapt::adapt(ckpt, tgt_train, tgt_val, cfg);
  REQUIRE(r1.checkpoint.parameters.size() == r2.checkpoint.parameters.size());
  for (std::size_t i = 0; i < r1.checkpoint.parameters.size(); ++i) {
    CHECK(r1.checkpoint.parameters[i].values == r2.checkpoint.parameters[i].values);
  }
  REQUIRE(r1.trace.records.size() == r2.trace.records.size());
  for (std::size_t e = 0; e < r1.trace.records.size(); ++e) {
    CHECK(r1.trace.records[e].train_loss == r2.trace.records[e].train_loss);
  }
}

TEST_CASE("adaptation validates its inputs against the checkpoint") {
  const auto src_train = test::make_blobs(120, 4, 3, 801, 0.25);
  const auto src_val = test::make_blobs(60, 4, 3, 802, 0.25, data::SplitTag::Val);
  const auto ckpt = train_small_source(src_train, src_val, 81);

  // Feature-name mismatch.
  auto renamed = test::make_blobs(120, 4, 3, 811, 0.25);
  renamed.feature_names[2] = "mystery";
  CHECK_THROWS(adapt::adapt(ckpt, renamed, src_val, fast_adapt(AdaptScope::Partial, 83)));
  CHECK_THROWS(evaluate_transfer(ckpt, renamed));

  // Class-count mismatch.
  const auto five = test::make_blobs(150, 4, 5, 812, 0.25);
  CHECK_THROWS(adapt::adapt(ckpt, five, five, fast_adapt(AdaptScope::Partial, 83)));

  // Width mismatch (different feature set entirely).
  const auto wide = test::make_blobs(120, 6, 3, 813, 0.25);
  CHECK_THROWS(evaluate_transfer(ckpt, wide));

  // Bad config propagates.
  auto bad = fast_adapt(AdaptScope::Partial, 83);
  bad.lr = 0.0;
  CHECK_THROWS(adapt::adapt(ckpt, src_train, src_val, bad));
}
