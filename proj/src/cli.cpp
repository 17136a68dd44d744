#include "helios/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "helios/adaptation.hpp"
#include "helios/checkpoint.hpp"
#include "helios/csv.hpp"
#include "helios/dataset.hpp"
#include "helios/ensemble.hpp"
#include "helios/features.hpp"
#include "helios/metrics.hpp"
#include "helios/model.hpp"
#include "helios/rng.hpp"
#include "helios/synth.hpp"
#include "helios/training.hpp"

namespace helios::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config: " + path + " must hold a JSON object");
  }
  return j;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

json section(const json& cfg, const char* name) {
  if (!cfg.contains(name)) return json::object();
  if (!cfg[name].is_object()) {
    throw ConfigError(std::string("config: '") + name + "' must be an object");
  }
  return cfg[name];
}

template <typename T>
T value_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: key '") + key + "' has the wrong type");
  }
}

void validate_config(const json& cfg) {
  check_keys(cfg,
             {"n_classes", "ratios", "standardize", "arch", "train", "adapt", "features",
              "baseline", "synth", "bench"},
             "config");
  check_keys(section(cfg, "arch"), {"conv_blocks", "fc_hidden"}, "arch");
  check_keys(section(cfg, "train"), {"lr", "batch_size", "max_epochs", "patience", "shuffle"},
             "train");
  check_keys(section(cfg, "adapt"),
             {"lr", "batch_size", "max_epochs", "patience", "shuffle", "refit_standardizer"},
             "adapt");
  check_keys(section(cfg, "features"), {"k", "n_trees"}, "features");
  check_keys(section(cfg, "baseline"),
             {"rf_trees", "rf_max_depth", "ada_rounds", "gbm_rounds", "gbm_learning_rate",
              "gbm_max_depth"},
             "baseline");
  check_keys(section(cfg, "synth"),
             {"days", "step_seconds", "solar_step_seconds", "shift", "capacity_kw", "cloudiness",
              "temp_mean", "temp_amplitude", "season_amplitude", "ghi_peak", "ghi_noise",
              "temp_noise", "power_noise"},
             "synth");
  check_keys(section(cfg, "bench"), {"domains", "days", "shift", "saturation_window",
                                     "saturation_epsilon"},
             "bench");
}

train::TrainConfig train_config_from(const json& cfg, std::uint64_t seed) {
  const json t = section(cfg, "train");
  train::TrainConfig out;
  out.lr = value_or(t, "lr", out.lr);
  out.batch_size = value_or(t, "batch_size", out.batch_size);
  out.max_epochs = value_or(t, "max_epochs", out.max_epochs);
  out.patience = value_or(t, "patience", out.patience);
  out.shuffle = value_or(t, "shuffle", out.shuffle);
  out.seed = seed;
  return out;
}

adapt::AdaptConfig adapt_config_from(const json& cfg, std::uint64_t seed,
                                     adapt::AdaptScope scope) {
  const json a = section(cfg, "adapt");
  adapt::AdaptConfig out;
  out.lr = value_or(a, "lr", out.lr);
  out.batch_size = value_or(a, "batch_size", out.batch_size);
  out.max_epochs = value_or(a, "max_epochs", out.max_epochs);
  out.patience = value_or(a, "patience", out.patience);
  out.shuffle = value_or(a, "shuffle", out.shuffle);
  out.refit_standardizer = value_or(a, "refit_standardizer", out.refit_standardizer);
  out.scope = scope;
  out.seed = seed;
  return out;
}

model::ArchitectureSpec arch_from(const json& cfg, int n_features, int n_classes) {
  const json a = section(cfg, "arch");
  model::ArchitectureSpec spec;
  spec.n_features = n_features;
  spec.n_classes = n_classes;
  spec.fc_hidden = value_or(a, "fc_hidden", spec.fc_hidden);
  if (a.contains("conv_blocks")) {
    spec.conv_blocks.clear();
    for (const auto& b : a["conv_blocks"]) {
      if (!b.is_array() || b.size() != 4) {
        throw ConfigError("config: arch.conv_blocks entries must be [channels,kernel,stride,padding]");
      }
      spec.conv_blocks.push_back(
          {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()});
    }
  }
  spec.validate();
  return spec;
}

synth::ClimateParams synth_params_from(const json& cfg, std::uint64_t seed) {
  const json s = section(cfg, "synth");
  synth::ClimateParams p;
  p.capacity_kw = value_or(s, "capacity_kw", p.capacity_kw);
  p.cloudiness = value_or(s, "cloudiness", p.cloudiness);
  p.temp_mean = value_or(s, "temp_mean", p.temp_mean);
  p.temp_amplitude = value_or(s, "temp_amplitude", p.temp_amplitude);
  p.season_amplitude = value_or(s, "season_amplitude", p.season_amplitude);
  p.ghi_peak = value_or(s, "ghi_peak", p.ghi_peak);
  p.ghi_noise = value_or(s, "ghi_noise", p.ghi_noise);
  p.temp_noise = value_or(s, "temp_noise", p.temp_noise);
  p.power_noise = value_or(s, "power_noise", p.power_noise);
  p.seed = seed;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: synth: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------- output

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cli: cannot write " + path.string());
  }
  out << j.dump(2) << "\n";
}

void write_manifest(const fs::path& dir, const std::string& command, const json& cfg,
                    std::uint64_t seed) {
  json m;
  m["format_version"] = "1";
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = cfg;
  write_json_file(dir / "manifest.json", m);
}

fs::path make_out_dir(const std::string& out) {
  if (out.empty()) {
    throw ConfigError("cli: --out is required");
  }
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cli: cannot create " + dir.string() + ": " + ec.message());
  }
  return dir;
}

// ------------------------------------------------------------- datasets

struct PreparedRoot {
  data::LabeledDataset train, val, test;
};

PreparedRoot load_root(const std::string& root_str) {
  const fs::path root(root_str);
  if (!fs::exists(root / "train" / "meta.json")) {
    throw ConfigError("cli: " + root.string() +
                      " is not a prepared dataset directory (missing train/meta.json)");
  }
  return {data::load_dataset(root / "train"), data::load_dataset(root / "val"),
          data::load_dataset(root / "test")};
}

void save_root(const PreparedRoot& prepared, const fs::path& root) {
  data::save_dataset(prepared.train, root / "train");
  data::save_dataset(prepared.val, root / "val");
  data::save_dataset(prepared.test, root / "test");
}

data::LabeledDataset align_to_checkpoint(const data::LabeledDataset& ds,
                                         const model::ModelCheckpoint& ckpt) {
  if (ds.feature_names == ckpt.feature_names) return ds;
  std::vector<std::size_t> columns;
  for (const auto& name : ckpt.feature_names) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    if (it == ds.feature_names.end()) {
      throw ConfigError("cli: dataset lacks feature '" + name + "' required by the checkpoint");
    }
    columns.push_back(static_cast<std::size_t>(it - ds.feature_names.begin()));
  }
  return features::restrict_features(ds, columns);
}

json histogram_json(const data::LabeledDataset& ds) {
  json j;
  j["n"] = ds.size();
  j["label_histogram"] = ds.label_histogram();
  return j;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out, config;
  std::uint64_t seed = 1;
  int days = 365;
  double shift = 1.0;
};

data::TimeSeriesFrame weather_only(data::TimeSeriesFrame frame) {
  frame.channels.erase("power_kw");
  frame.units.erase("power_kw");
  return frame;
}

data::TimeSeriesFrame power_only(data::TimeSeriesFrame frame) {
  data::TimeSeriesFrame out;
  out.timestamps = std::move(frame.timestamps);
  out.channels["power_kw"] = std::move(frame.channels["power_kw"]);
  out.units["power_kw"] = "kW";
  return out;
}

int cmd_synth(const SynthArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  if (args.days < 1) {
    throw ConfigError("synth: --days must be at least 1");
  }
  const fs::path out = make_out_dir(args.out);
  const json s = section(cfg, "synth");
  const auto weather_step = value_or<std::int64_t>(s, "step_seconds", 1800);
  const auto solar_step = value_or<std::int64_t>(s, "solar_step_seconds", 300);

  const synth::ClimateParams source = synth_params_from(cfg, args.seed);
  const synth::ClimateParams target = synth::shifted_params(source, args.shift);

  const std::vector<std::pair<std::string, synth::ClimateParams>> domains = {
      {"source", source}, {"target", target}};
  std::vector<std::string> weather_channels;
  for (const auto& [name, params] : domains) {
    const auto weather = weather_only(synth::generate_domain(params, args.days, weather_step));
    const auto solar = power_only(synth::generate_domain(params, args.days, solar_step));
    data::write_frame_csv(weather, out / (name + "_weather.csv"));
    data::write_frame_csv(solar, out / (name + "_solar.csv"));
    if (weather_channels.empty()) {
      for (const auto& [channel, values] : weather.channels) weather_channels.push_back(channel);
    }
  }
  data::CsvSchema::identity(weather_channels).save(out / "weather_schema.json");
  data::CsvSchema::identity({"power_kw"}).save(out / "solar_schema.json");

  write_manifest(out, "synth", cfg, args.seed);
  std::cout << "wrote source/target weather+solar CSVs to " << out.string() << "\n";
  return 0;
}

// -------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string weather, weather_schema, solar, solar_schema, out, config;
  std::string domain_id = "domain";
  bool no_standardize = false;
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("prepare/") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("prepare/") + name + ": " + e.what());
  }
}

int cmd_prepare(const PrepareArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  const fs::path out = make_out_dir(args.out);

  if (args.weather.empty() || args.weather_schema.empty()) {
    throw ConfigError("prepare: --weather and --weather-schema are required");
  }
  const auto weather_schema =
      stage("schema", [&] { return data::CsvSchema::load(args.weather_schema); });
  auto weather = stage("ingest", [&] { return data::ingest_csv(args.weather, weather_schema); });

  std::size_t join_dropped = 0;
  data::TimeSeriesFrame joined;
  if (!args.solar.empty()) {
    if (args.solar_schema.empty()) {
      throw ConfigError("prepare: --solar-schema is required with --solar");
    }
    const auto solar_schema =
        stage("schema", [&] { return data::CsvSchema::load(args.solar_schema); });
    auto solar = stage("ingest", [&] { return data::ingest_csv(args.solar, solar_schema); });
    auto resampled =
        stage("resample", [&] { return data::resample_mean(solar, weather.step_seconds()); });
    auto join = stage("join", [&] { return data::align_join(weather, resampled); });
    joined = std::move(join.frame);
    join_dropped = join.dropped_rows;
  } else {
    joined = std::move(weather);
  }

  data::PipelineOptions opts;
  opts.n_classes = value_or<std::size_t>(cfg, "n_classes", opts.n_classes);
  if (cfg.contains("ratios")) {
    const auto r = cfg["ratios"].get<std::vector<double>>();
    if (r.size() != 3) throw ConfigError("config: ratios must have 3 entries");
    opts.ratios = {r[0], r[1], r[2]};
  }
  opts.standardize = !args.no_standardize && value_or(cfg, "standardize", true);
  opts.domain_id = args.domain_id;

  const auto prepared = stage("pipeline", [&] { return data::prepare_domain(joined, opts); });
  stage("persist", [&] {
    save_root({prepared.train, prepared.val, prepared.test}, out);
    return 0;
  });

  json summary;
  summary["domain_id"] = args.domain_id;
  summary["step_seconds"] = joined.step_seconds();
  summary["rows_joined"] = joined.size();
  summary["rows_dropped_join"] = join_dropped;
  summary["rows_dropped_nan"] = prepared.rows_dropped_nan;
  summary["labels_clamped"] = prepared.labels_clamped;
  summary["n_classes"] = opts.n_classes;
  summary["standardized"] = opts.standardize;
  summary["splits"] = {{"train", histogram_json(prepared.train)},
                       {"val", histogram_json(prepared.val)},
                       {"test", histogram_json(prepared.test)}};
  write_json_file(out / "summary.json", summary);
  write_manifest(out, "prepare", cfg, 0);
  std::cout << "prepared " << joined.size() << " rows into " << out.string() << "\n";
  return 0;
}

// ------------------------------------------------------- select-features

struct SelectArgs {
  std::string data, out, config;
  std::uint64_t seed = 1;
  std::size_t k = 0;  // 0: from config (default 6)
};

int cmd_select_features(const SelectArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  const fs::path out = make_out_dir(args.out);
  const json f = section(cfg, "features");
  const std::size_t k = args.k > 0 ? args.k : value_or<std::size_t>(f, "k", 6);
  const std::size_t n_trees = value_or<std::size_t>(f, "n_trees", 100);

  const PreparedRoot root = load_root(args.data);
  const auto report = features::fit_importance(root.train, n_trees, args.seed);
  features::save_report(report, out / "importance.json");

  const auto columns = features::select_features(report, k);
  PreparedRoot reduced{features::restrict_features(root.train, columns),
                       features::restrict_features(root.val, columns),
                       features::restrict_features(root.test, columns)};
  save_root(reduced, out);

  json summary;
  summary["k"] = k;
  summary["n_trees"] = n_trees;
  summary["selected_columns"] = columns;
  summary["selected_features"] = reduced.train.feature_names;
  summary["importances"] = report.importances;
  write_json_file(out / "summary.json", summary);
  write_manifest(out, "select-features", cfg, args.seed);
  std::cout << "selected " << k << " features into " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data, out, config;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  const fs::path out = make_out_dir(args.out);
  const PreparedRoot root = load_root(args.data);

  const auto spec = arch_from(cfg, static_cast<int>(root.train.n_features()),
                              static_cast<int>(root.train.binning.n_classes));
  model::Model net(spec, args.seed);
  const auto result = train::train_source(net, root.train, root.val,
                                          train_config_from(cfg, args.seed));

  model::save_checkpoint(result.checkpoint, out / "checkpoint.hsckpt");
  result.trace.save_csv(out / "trace.csv");

  eval::Metrics metrics = adapt::evaluate_transfer(result.checkpoint, root.test);
  metrics.metadata["arm"] = "source-test";
  eval::save_metrics_json(metrics, out / "metrics.json");
  std::ofstream csv(out / "metrics.csv");
  csv << eval::metrics_csv_header() << "\n" << eval::metrics_csv_row(metrics) << "\n";

  json summary;
  summary["domain_id"] = root.train.domain_id;
  summary["epochs_run"] = result.trace.records.size();
  summary["best_epoch"] = result.trace.best_epoch;
  summary["best_val_acc"] = result.trace.best_val_acc;
  summary["test_accuracy"] = metrics.accuracy;
  summary["test_weighted_f1"] = metrics.weighted_f1;
  summary["parameter_count"] = net.parameter_count();
  summary["its_per_sec"] = result.trace.its_per_sec();
  write_json_file(out / "summary.json", summary);
  write_manifest(out, "train", cfg, args.seed);
  std::cout << "trained " << result.trace.records.size() << " epochs; test accuracy "
            << format_double(metrics.accuracy) << "\n";
  return 0;
}

// ---------------------------------------------------------------- adapt

struct AdaptArgs {
  std::string checkpoint, data, out, config;
  std::string scope = "partial";
  std::uint64_t seed = 1;
};

int cmd_adapt(const AdaptArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  const fs::path out = make_out_dir(args.out);
  if (args.checkpoint.empty()) {
    throw ConfigError("adapt: --checkpoint is required");
  }
  if (!fs::exists(args.checkpoint)) {
    throw ConfigError("adapt: checkpoint " + args.checkpoint + " does not exist");
  }
  const auto ckpt = model::load_checkpoint(args.checkpoint);
  const PreparedRoot raw = load_root(args.data);
  const PreparedRoot root{align_to_checkpoint(raw.train, ckpt),
                          align_to_checkpoint(raw.val, ckpt),
                          align_to_checkpoint(raw.test, ckpt)};
  const auto scope = adapt::scope_from(args.scope);

  const auto result = adapt::adapt(ckpt, root.train, root.val,
                                   adapt_config_from(cfg, args.seed, scope));
  model::save_checkpoint(result.checkpoint, out / "adapted.hsckpt");
  result.trace.save_csv(out / "trace.csv");

  eval::Metrics before = adapt::evaluate_transfer(ckpt, root.test);
  eval::Metrics after = adapt::evaluate_transfer(result.checkpoint, root.test);
  after.metadata["arm"] = "adapt";
  after.metadata["scope"] = adapt::scope_name(scope);
  after.metadata["source"] = ckpt.provenance.domain_id;
  after.metadata["standardizer"] = "target";
  eval::save_metrics_json(after, out / "metrics.json");
  eval::save_metrics_json(before, out / "metrics_no_adapt.json");
  std::ofstream csv(out / "metrics.csv");
  csv << eval::metrics_csv_header() << "\n"
      << eval::metrics_csv_row(before) << "\n"
      << eval::metrics_csv_row(after) << "\n";

  const auto saturation = eval::epochs_to_saturation(result.trace);
  json summary;
  summary["scope"] = adapt::scope_name(scope);
  summary["unadapted_accuracy"] = before.accuracy;
  summary["adapted_accuracy"] = after.accuracy;
  summary["accuracy_gain"] = after.accuracy - before.accuracy;
  summary["unadapted_weighted_f1"] = before.weighted_f1;
  summary["adapted_weighted_f1"] = after.weighted_f1;
  summary["epochs_run"] = result.trace.records.size();
  summary["best_epoch"] = result.trace.best_epoch;
  summary["saturation_epoch"] = saturation.epoch;
  summary["saturation_confirmed"] = saturation.saturated;
  summary["its_per_sec"] = result.trace.its_per_sec();
  write_json_file(out / "summary.json", summary);
  write_manifest(out, "adapt", cfg, args.seed);
  std::cout << "adapted (" << adapt::scope_name(scope) << "): accuracy "
            << format_double(before.accuracy) << " -> " << format_double(after.accuracy) << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint, data, out;
  std::string split = "test";
};

int cmd_eval(const EvalArgs& args) {
  const fs::path out = make_out_dir(args.out);
  if (args.checkpoint.empty()) {
    throw ConfigError("eval: --checkpoint is required");
  }
  if (!fs::exists(args.checkpoint)) {
    throw ConfigError("eval: checkpoint " + args.checkpoint + " does not exist");
  }
  const auto ckpt = model::load_checkpoint(args.checkpoint);
  const PreparedRoot root = load_root(args.data);
  const data::LabeledDataset* ds = nullptr;
  if (args.split == "train") {
    ds = &root.train;
  } else if (args.split == "val") {
    ds = &root.val;
  } else if (args.split == "test") {
    ds = &root.test;
  } else {
    throw ConfigError("eval: --split must be train, val, or test");
  }

  const eval::Metrics metrics = adapt::evaluate_transfer(ckpt, align_to_checkpoint(*ds, ckpt));
  eval::save_metrics_json(metrics, out / "metrics.json");
  std::ofstream csv(out / "metrics.csv");
  csv << eval::metrics_csv_header() << "\n" << eval::metrics_csv_row(metrics) << "\n";
  write_manifest(out, "eval", json::object(), 0);
  std::cout << "accuracy " << format_double(metrics.accuracy) << ", weighted F1 "
            << format_double(metrics.weighted_f1) << "\n";
  return 0;
}

// ------------------------------------------------------------- baseline

struct BaselineArgs {
  std::string data, out, config;
  std::string kind;
  std::uint64_t seed = 1;
};

int cmd_baseline(const BaselineArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  const fs::path out = make_out_dir(args.out);
  const auto kind = trees::kind_from(args.kind);
  const PreparedRoot root = load_root(args.data);
  const json b = section(cfg, "baseline");

  trees::EnsembleModel fitted;
  switch (kind) {
    case trees::EnsembleKind::RandomForest: {
      trees::RandomForestParams params;
      params.n_trees = value_or<std::size_t>(b, "rf_trees", params.n_trees);
      params.max_depth = value_or(b, "rf_max_depth", params.max_depth);
      fitted = trees::fit_random_forest(root.train.features, root.train.labels,
                                        root.train.binning.n_classes, params, args.seed);
      break;
    }
    case trees::EnsembleKind::AdaBoost: {
      trees::AdaBoostParams params;
      params.n_rounds = value_or<std::size_t>(b, "ada_rounds", params.n_rounds);
      fitted = trees::fit_adaboost(root.train.features, root.train.labels,
                                   root.train.binning.n_classes, params, args.seed);
      break;
    }
    case trees::EnsembleKind::GradientBoosting: {
      trees::GbmParams params;
      params.n_rounds = value_or<std::size_t>(b, "gbm_rounds", params.n_rounds);
      params.learning_rate = value_or(b, "gbm_learning_rate", params.learning_rate);
      params.max_depth = value_or(b, "gbm_max_depth", params.max_depth);
      fitted = trees::fit_gradient_boosting(root.train.features, root.train.labels,
                                            root.train.binning.n_classes, params, args.seed);
      break;
    }
  }

  trees::save_ensemble(fitted, out / "model.hsens");
  eval::Metrics metrics = eval::compute_metrics(root.test.labels,
                                                fitted.predict(root.test.features),
                                                root.train.binning.n_classes);
  metrics.metadata["arm"] = "baseline";
  metrics.metadata["kind"] = trees::kind_name(kind);
  metrics.metadata["source"] = root.train.domain_id;
  metrics.metadata["target"] = root.test.domain_id;
  eval::save_metrics_json(metrics, out / "metrics.json");
  std::ofstream csv(out / "metrics.csv");
  csv << eval::metrics_csv_header() << "\n" << eval::metrics_csv_row(metrics) << "\n";

  json summary;
  summary["kind"] = trees::kind_name(kind);
  summary["train_accuracy"] = fitted.accuracy(root.train.features, root.train.labels);
  summary["test_accuracy"] = metrics.accuracy;
  summary["test_weighted_f1"] = metrics.weighted_f1;
  summary["n_trees"] = fitted.trees.size();
  write_json_file(out / "summary.json", summary);
  write_manifest(out, "baseline", cfg, args.seed);
  std::cout << trees::kind_name(kind) << " test accuracy " << format_double(metrics.accuracy)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string out, config;
  std::uint64_t seed = 1;
  int domains = 2;
  int days = 64;
  double shift = 1.0;
  bool no_feature_selection = false;
};

std::string csv_cell(double v) { return format_double(v); }

int cmd_bench(const BenchArgs& args) {
  const json cfg = load_config_file(args.config);
  validate_config(cfg);
  const fs::path out = make_out_dir(args.out);
  const fs::path trace_dir = out / "traces";
  fs::create_directories(trace_dir);
  const json bench_cfg = section(cfg, "bench");
  const int n_domains = value_or(bench_cfg, "domains", args.domains);
  const int days = value_or(bench_cfg, "days", args.days);
  const double shift = value_or(bench_cfg, "shift", args.shift);
  const int window = value_or(bench_cfg, "saturation_window", 10);
  const double epsilon = value_or(bench_cfg, "saturation_epsilon", 0.005);
  if (n_domains < 2) {
    throw ConfigError("bench: need at least 2 domains");
  }
  if (days < 1) {
    throw ConfigError("bench: days must be at least 1");
  }
  const json f = section(cfg, "features");
  const std::size_t select_k = value_or<std::size_t>(f, "k", 6);
  const std::size_t select_trees = value_or<std::size_t>(f, "n_trees", 100);

  // Domain i sits at shift level shift * i / (n_domains - 1).
  const synth::ClimateParams base = synth_params_from(cfg, args.seed);
  std::vector<PreparedRoot> domains;
  std::vector<std::string> ids;
  for (int i = 0; i < n_domains; ++i) {
    const double level = shift * static_cast<double>(i) / static_cast<double>(n_domains - 1);
    synth::ClimateParams params = synth::shifted_params(base, level);
    params.seed = derive_seed(args.seed, 0x646f6d, static_cast<std::uint64_t>(i));  // "dom"
    const auto frame = synth::generate_domain(params, days, 1800);
    data::PipelineOptions opts;
    opts.n_classes = value_or<std::size_t>(cfg, "n_classes", opts.n_classes);
    opts.domain_id = "d" + std::to_string(i);
    const auto prepared = data::prepare_domain(frame, opts);
    domains.push_back({prepared.train, prepared.val, prepared.test});
    ids.push_back(opts.domain_id);
  }

  std::ofstream bench_csv(out / "bench.csv");
  bench_csv << "source,target,arm,scope,accuracy,weighted_f1,its_per_sec,saturation_epoch\n";
  auto emit = [&bench_csv](const std::string& source, const std::string& target,
                           const std::string& arm, const std::string& scope,
                           const eval::Metrics& m, const train::RunTrace* trace, int window_,
                           double epsilon_) {
    bench_csv << source << "," << target << "," << arm << "," << scope << ","
              << csv_cell(m.accuracy) << "," << csv_cell(m.weighted_f1) << ",";
    if (trace != nullptr) {
      bench_csv << csv_cell(trace->its_per_sec()) << ","
                << eval::epochs_to_saturation(*trace, window_, epsilon_).epoch;
    } else {
      bench_csv << ",";
    }
    bench_csv << "\n";
  };

  json summary;
  summary["domains"] = ids;
  summary["cells"] = json::array();

  for (int s = 0; s < n_domains; ++s) {
    // Feature selection happens on the source side only; targets adopt
    // the source's feature list through the checkpoint.
    std::vector<std::size_t> columns(domains[static_cast<std::size_t>(s)].train.n_features());
    for (std::size_t c = 0; c < columns.size(); ++c) columns[c] = c;
    if (!args.no_feature_selection) {
      const auto report = features::fit_importance(
          domains[static_cast<std::size_t>(s)].train, select_trees,
          derive_seed(args.seed, 0x6673, static_cast<std::uint64_t>(s)));  // "fs"
      columns = features::select_features(report, select_k);
    }
    auto restrict_root = [&columns](const PreparedRoot& root) {
      return PreparedRoot{features::restrict_features(root.train, columns),
                          features::restrict_features(root.val, columns),
                          features::restrict_features(root.test, columns)};
    };

    const PreparedRoot src = restrict_root(domains[static_cast<std::size_t>(s)]);
    const auto spec = arch_from(cfg, static_cast<int>(src.train.n_features()),
                                static_cast<int>(src.train.binning.n_classes));
    model::Model net(spec, derive_seed(args.seed, 0x747261696e, static_cast<std::uint64_t>(s)));
    const auto trained = train::train_source(
        net, src.train, src.val,
        train_config_from(cfg, derive_seed(args.seed, 0x747261696e, static_cast<std::uint64_t>(s))));
    trained.trace.save_csv(trace_dir / (ids[static_cast<std::size_t>(s)] + "_source.csv"));

    for (int t = 0; t < n_domains; ++t) {
      if (t == s) continue;
      const PreparedRoot tgt = restrict_root(domains[static_cast<std::size_t>(t)]);
      const std::string& sid = ids[static_cast<std::size_t>(s)];
      const std::string& tid = ids[static_cast<std::size_t>(t)];
      const std::string cell = sid + "_to_" + tid;

      eval::Metrics transfer = adapt::evaluate_transfer(trained.checkpoint, tgt.test);
      emit(sid, tid, "no-adapt", "", transfer, nullptr, window, epsilon);

      json cell_summary;
      cell_summary["source"] = sid;
      cell_summary["target"] = tid;
      cell_summary["no_adapt_accuracy"] = transfer.accuracy;

      for (const auto scope : {adapt::AdaptScope::Partial, adapt::AdaptScope::Full}) {
        const auto acfg = adapt_config_from(
            cfg,
            derive_seed(args.seed, 0x616461, static_cast<std::uint64_t>(s),
                        static_cast<std::uint64_t>(t)),
            scope);
        const auto adapted = adapt::adapt(trained.checkpoint, tgt.train, tgt.val, acfg);
        adapted.trace.save_csv(trace_dir / (cell + "_adapt_" + adapt::scope_name(scope) + ".csv"));
        eval::Metrics m = adapt::evaluate_transfer(adapted.checkpoint, tgt.test);
        m.metadata["arm"] = "adapt";
        m.metadata["scope"] = adapt::scope_name(scope);
        emit(sid, tid, "adapt", adapt::scope_name(scope), m, &adapted.trace, window, epsilon);
        cell_summary["adapt_" + adapt::scope_name(scope) + "_accuracy"] = m.accuracy;
        cell_summary["adapt_" + adapt::scope_name(scope) + "_its_per_sec"] =
            adapted.trace.its_per_sec();
        cell_summary["adapt_" + adapt::scope_name(scope) + "_saturation"] =
            eval::epochs_to_saturation(adapted.trace, window, epsilon).epoch;
      }

      model::Model scratch_net(
          spec, derive_seed(args.seed, 0x736372, static_cast<std::uint64_t>(s),
                            static_cast<std::uint64_t>(t)));  // "scr"
      const auto scratch = train::train_source(
          scratch_net, tgt.train, tgt.val,
          train_config_from(cfg, derive_seed(args.seed, 0x736372, static_cast<std::uint64_t>(s),
                                             static_cast<std::uint64_t>(t))));
      scratch.trace.save_csv(trace_dir / (cell + "_scratch.csv"));
      eval::Metrics sm = adapt::evaluate_transfer(scratch.checkpoint, tgt.test);
      sm.metadata["arm"] = "scratch";
      emit(sid, tid, "scratch", "", sm, &scratch.trace, window, epsilon);
      cell_summary["scratch_accuracy"] = sm.accuracy;
      cell_summary["scratch_saturation"] =
          eval::epochs_to_saturation(scratch.trace, window, epsilon).epoch;

      summary["cells"].push_back(std::move(cell_summary));
    }
  }

  write_json_file(out / "summary.json", summary);
  write_manifest(out, "bench", cfg, args.seed);
  std::cout << "bench matrix over " << n_domains << " domains written to " << out.string()
            << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"solar power classification with source-free domain adaptation"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic source/target domain CSVs");
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  synth_cmd->add_option("--seed", synth_args.seed, "master seed");
  synth_cmd->add_option("--days", synth_args.days, "days per domain");
  synth_cmd->add_option("--shift", synth_args.shift, "target-domain shift level");
  synth_cmd->add_option("--config", synth_args.config, "config JSON path");

  PrepareArgs prepare_args;
  auto* prepare_cmd =
      app.add_subcommand("prepare", "ingest, resample, join, bin, split, standardize");
  prepare_cmd->add_option("--weather", prepare_args.weather, "weather CSV path")->required();
  prepare_cmd->add_option("--weather-schema", prepare_args.weather_schema, "weather schema JSON")
      ->required();
  prepare_cmd->add_option("--solar", prepare_args.solar, "solar power CSV path");
  prepare_cmd->add_option("--solar-schema", prepare_args.solar_schema, "solar schema JSON");
  prepare_cmd->add_option("--out", prepare_args.out, "output dataset directory")->required();
  prepare_cmd->add_option("--domain-id", prepare_args.domain_id, "domain identifier");
  prepare_cmd->add_option("--config", prepare_args.config, "config JSON path");
  prepare_cmd->add_flag("--no-standardize", prepare_args.no_standardize,
                        "keep raw feature units");

  SelectArgs select_args;
  auto* select_cmd =
      app.add_subcommand("select-features", "rank features and emit a reduced dataset");
  select_cmd->add_option("--data", select_args.data, "prepared dataset directory")->required();
  select_cmd->add_option("--out", select_args.out, "output directory")->required();
  select_cmd->add_option("--k", select_args.k, "number of features to keep");
  select_cmd->add_option("--seed", select_args.seed, "selector seed");
  select_cmd->add_option("--config", select_args.config, "config JSON path");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the source classifier");
  train_cmd->add_option("--data", train_args.data, "prepared dataset directory")->required();
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "training seed");
  train_cmd->add_option("--config", train_args.config, "config JSON path");

  AdaptArgs adapt_args;
  auto* adapt_cmd = app.add_subcommand("adapt", "adapt a checkpoint to a target domain");
  adapt_cmd->add_option("--checkpoint", adapt_args.checkpoint, "source checkpoint path")
      ->required();
  adapt_cmd->add_option("--data", adapt_args.data, "prepared target dataset directory")
      ->required();
  adapt_cmd->add_option("--out", adapt_args.out, "output directory")->required();
  adapt_cmd->add_option("--scope", adapt_args.scope, "partial|full");
  adapt_cmd->add_option("--seed", adapt_args.seed, "adaptation seed");
  adapt_cmd->add_option("--config", adapt_args.config, "config JSON path");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_args.data, "prepared dataset directory")->required();
  eval_cmd->add_option("--split", eval_args.split, "train|val|test");
  eval_cmd->add_option("--out", eval_args.out, "output directory")->required();

  BaselineArgs baseline_args;
  auto* baseline_cmd = app.add_subcommand("baseline", "fit and evaluate a tree-ensemble baseline");
  baseline_cmd->add_option("--data", baseline_args.data, "prepared dataset directory")->required();
  baseline_cmd->add_option("--kind", baseline_args.kind, "rf|adaboost|gbm")->required();
  baseline_cmd->add_option("--out", baseline_args.out, "output directory")->required();
  baseline_cmd->add_option("--seed", baseline_args.seed, "baseline seed");
  baseline_cmd->add_option("--config", baseline_args.config, "config JSON path");

  BenchArgs bench_args;
  auto* bench_cmd =
      app.add_subcommand("bench", "run the scratch-vs-adapt matrix on synthetic domain pairs");
  bench_cmd->add_option("--out", bench_args.out, "output directory")->required();
  bench_cmd->add_option("--seed", bench_args.seed, "master seed");
  bench_cmd->add_option("--domains", bench_args.domains, "number of synthetic domains");
  bench_cmd->add_option("--days", bench_args.days, "days per domain");
  bench_cmd->add_option("--shift", bench_args.shift, "maximum shift level");
  bench_cmd->add_option("--config", bench_args.config, "config JSON path");
  bench_cmd->add_flag("--no-feature-selection", bench_args.no_feature_selection,
                      "train on all channels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
    if (prepare_cmd->parsed()) return cmd_prepare(prepare_args);
    if (select_cmd->parsed()) return cmd_select_features(select_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (adapt_cmd->parsed()) return cmd_adapt(adapt_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (baseline_cmd->parsed()) return cmd_baseline(baseline_args);
    if (bench_cmd->parsed()) return cmd_bench(bench_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace helios::cli
