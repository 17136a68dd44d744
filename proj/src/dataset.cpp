#include "helios/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace helios::data {

using nlohmann::json;

BinningScheme fit_bins(const std::vector<double>& power, std::size_t n_classes,
                       const std::string& domain_id) {
  if (power.empty()) throw std::invalid_argument("fit_bins: empty power sequence");
  if (n_classes < 2) throw std::invalid_argument("fit_bins: need at least 2 classes");
  double max_p = 0.0;
  for (double p : power) {
    if (std::isnan(p) || p < 0.0)
      throw std::invalid_argument("fit_bins: power values must be finite and >= 0");
    max_p = std::max(max_p, p);
  }
  if (max_p <= 0.0)
    throw std::invalid_argument("fit_bins: all power values are zero");

  BinningScheme scheme;
  scheme.n_classes = n_classes;
  scheme.domain_id = domain_id;
  scheme.edges.resize(n_classes + 1);
  for (std::size_t i = 0; i <= n_classes; ++i)
    scheme.edges[i] = max_p * static_cast<double>(i) / static_cast<double>(n_classes);
  scheme.edges[0] = 0.0;
  scheme.edges[n_classes] = max_p;
  return scheme;
}

std::size_t assign_label(double power, const BinningScheme& scheme, std::size_t* clamped) {
  if (std::isnan(power) || power < 0.0)
    throw std::invalid_argument("assign_label: power must be finite and >= 0");
  const auto& e = scheme.edges;
  if (power >= e.back()) {
    if (power > e.back() && clamped != nullptr) ++*clamped;
    return scheme.n_classes - 1;
  }
  // First edge strictly greater than power; class is the preceding bin.
  const auto it = std::upper_bound(e.begin(), e.end(), power);
  return static_cast<std::size_t>(it - e.begin()) - 1;
}

LabelResult labels_for(const std::vector<double>& power, const BinningScheme& scheme) {
  LabelResult res;
  res.labels.reserve(power.size());
  for (double p : power)
    res.labels.push_back(static_cast<int>(assign_label(p, scheme, &res.clamped)));
  return res;
}

Standardizer fit_standardizer(const Matrix& train) {
  if (train.rows == 0) throw std::invalid_argument("fit_standardizer: empty matrix");
  Standardizer s;
  s.mean.resize(train.cols);
  s.stddev.resize(train.cols);
  const double n = static_cast<double>(train.rows);
  for (std::size_t c = 0; c < train.cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) sum += train.at(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) {
      const double d = train.at(r, c) - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / n);
    if (sd < 1e-8) {
      sd = 1e-8;
      s.floored_columns.push_back(c);
    }
    s.mean[c] = mean;
    s.stddev[c] = sd;
  }
  return s;
}

Matrix apply_standardizer(const Matrix& data, const Standardizer& stats) {
  if (data.cols != stats.n_features())
    throw std::invalid_argument("standardizer fitted on " +
                                std::to_string(stats.n_features()) +
                                " features, data has " + std::to_string(data.cols));
  Matrix out(data.rows, data.cols);
  for (std::size_t r = 0; r < data.rows; ++r)
    for (std::size_t c = 0; c < data.cols; ++c)
      out.at(r, c) = (data.at(r, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

Matrix invert_standardizer(const Matrix& data, const Standardizer& stats) {
  if (data.cols != stats.n_features())
    throw std::invalid_argument("standardizer fitted on " +
                                std::to_string(stats.n_features()) +
                                " features, data has " + std::to_string(data.cols));
  Matrix out(data.rows, data.cols);
  for (std::size_t r = 0; r < data.rows; ++r)
    for (std::size_t c = 0; c < data.cols; ++c)
      out.at(r, c) = data.at(r, c) * stats.stddev[c] + stats.mean[c];
  return out;
}

std::string split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "train";
}

SplitTag split_tag_from(const std::string& name) {
  if (name == "train") return SplitTag::Train;
  if (name == "val") return SplitTag::Val;
  if (name == "test") return SplitTag::Test;
  throw std::invalid_argument("unknown split tag '" + name + "'");
}

void LabeledDataset::validate() const {
  if (labels.size() != features.rows)
    throw std::invalid_argument("dataset: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(features.rows) + " rows");
  if (feature_names.size() != features.cols)
    throw std::invalid_argument("dataset: feature name count mismatch");
  for (double v : features.data)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= binning.n_classes)
      throw std::invalid_argument("dataset: label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(binning.n_classes) + ")");
}

Matrix LabeledDataset::raw_features() const {
  return standardized ? invert_standardizer(features, standardizer) : features;
}

Matrix LabeledDataset::features_standardized_with(const Standardizer& stats) const {
  // Bit-exact fast path: already standardized with these exact statistics.
  if (standardized && standardizer.mean == stats.mean && standardizer.stddev == stats.stddev) {
    return features;
  }
  return apply_standardizer(raw_features(), stats);
}

std::vector<std::size_t> LabeledDataset::label_histogram() const {
  std::vector<std::size_t> hist(binning.n_classes, 0);
  for (int y : labels) ++hist[static_cast<std::size_t>(y)];
  return hist;
}

SplitSizes split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 ||
      std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be positive and sum to 1");
  const double nd = static_cast<double>(n);
  const auto b1 = static_cast<std::size_t>(std::floor(nd * ratios[0] + 0.5));
  const auto b2 = static_cast<std::size_t>(std::floor(nd * (ratios[0] + ratios[1]) + 0.5));
  SplitSizes s;
  s.train = b1;
  s.val = b2 - b1;
  s.test = n - b2;
  if (s.train == 0 || s.val == 0 || s.test == 0)
    throw std::invalid_argument("split of " + std::to_string(n) +
                                " rows leaves an empty part");
  return s;
}

FrameSplit split_chronological(const TimeSeriesFrame& frame,
                               const std::array<double, 3>& ratios) {
  frame.validate();
  const SplitSizes sz = split_sizes(frame.size(), ratios);
  auto slice = [&frame](std::size_t begin, std::size_t count) {
    TimeSeriesFrame out;
    out.units = frame.units;
    out.timestamps.assign(frame.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          frame.timestamps.begin() + static_cast<std::ptrdiff_t>(begin + count));
    for (const auto& [name, vals] : frame.channels)
      out.channels[name] =
          std::vector<double>(vals.begin() + static_cast<std::ptrdiff_t>(begin),
                              vals.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return out;
  };
  FrameSplit split;
  split.train = slice(0, sz.train);
  split.val = slice(sz.train, sz.val);
  split.test = slice(sz.train + sz.val, sz.test);
  return split;
}

namespace {

struct FrameTable {
  std::vector<std::string> names;  // channel order, power excluded
  Matrix features;
  std::vector<double> power;
};

/// Flattens a frame into a feature matrix + power vector, dropping rows
/// containing any NaN.
FrameTable tabulate(const TimeSeriesFrame& frame, const std::string& power_channel,
                    std::size_t* dropped) {
  if (frame.channels.count(power_channel) == 0)
    throw std::invalid_argument("prepare: missing power channel '" + power_channel + "'");
  FrameTable t;
  for (const auto& [name, vals] : frame.channels)
    if (name != power_channel) t.names.push_back(name);

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < frame.size(); ++r) {
    bool ok = true;
    for (const auto& [name, vals] : frame.channels)
      if (std::isnan(vals[r])) ok = false;
    if (ok)
      keep.push_back(r);
    else if (dropped != nullptr)
      ++*dropped;
  }

  t.features = Matrix(keep.size(), t.names.size());
  for (std::size_t c = 0; c < t.names.size(); ++c) {
    const auto& vals = frame.channels.at(t.names[c]);
    for (std::size_t r = 0; r < keep.size(); ++r) t.features.at(r, c) = vals[keep[r]];
  }
  const auto& pv = frame.channels.at(power_channel);
  t.power.reserve(keep.size());
  for (std::size_t r : keep) t.power.push_back(pv[r]);
  return t;
}

}  // namespace

PreparedDomain prepare_domain(const TimeSeriesFrame& joined, const PipelineOptions& opts) {
  joined.validate();
  PreparedDomain out;

  FrameSplit frames = split_chronological(joined, opts.ratios);
  FrameTable train_t = tabulate(frames.train, opts.power_channel, &out.rows_dropped_nan);
  FrameTable val_t = tabulate(frames.val, opts.power_channel, &out.rows_dropped_nan);
  FrameTable test_t = tabulate(frames.test, opts.power_channel, &out.rows_dropped_nan);
  if (train_t.features.rows == 0 || val_t.features.rows == 0 || test_t.features.rows == 0)
    throw std::runtime_error("prepare: a split is empty after NaN filtering");

  BinningScheme bins = fit_bins(train_t.power, opts.n_classes, opts.domain_id);
  Standardizer stats = fit_standardizer(train_t.features);

  auto build = [&](FrameTable& t, SplitTag tag) {
    LabeledDataset ds;
    ds.feature_names = t.names;
    ds.binning = bins;
    ds.standardizer = stats;
    ds.split_tag = tag;
    ds.domain_id = opts.domain_id;
    ds.standardized = opts.standardize;
    ds.features = opts.standardize ? apply_standardizer(t.features, stats)
                                   : std::move(t.features);
    LabelResult lr = labels_for(t.power, bins);
    ds.labels = std::move(lr.labels);
    out.labels_clamped += lr.clamped;
    ds.validate();
    return ds;
  };
  out.train = build(train_t, SplitTag::Train);
  out.val = build(val_t, SplitTag::Val);
  out.test = build(test_t, SplitTag::Test);
  return out;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);

  std::ofstream feat(dir / "features.csv");
  if (!feat) throw std::runtime_error("cannot write " + (dir / "features.csv").string());
  for (std::size_t c = 0; c < ds.feature_names.size(); ++c)
    feat << (c ? "," : "") << ds.feature_names[c];
  feat << "\n";
  for (std::size_t r = 0; r < ds.features.rows; ++r) {
    for (std::size_t c = 0; c < ds.features.cols; ++c)
      feat << (c ? "," : "") << format_double(ds.features.at(r, c));
    feat << "\n";
  }

  std::ofstream lab(dir / "labels.csv");
  if (!lab) throw std::runtime_error("cannot write " + (dir / "labels.csv").string());
  lab << "label\n";
  for (int y : ds.labels) lab << y << "\n";

  json meta;
  meta["format_version"] = "1";
  meta["domain_id"] = ds.domain_id;
  meta["split_tag"] = split_tag_name(ds.split_tag);
  meta["n_samples"] = ds.features.rows;
  meta["feature_names"] = ds.feature_names;
  meta["standardized"] = ds.standardized;
  meta["binning"] = {{"n_classes", ds.binning.n_classes},
                     {"edges", ds.binning.edges},
                     {"domain_id", ds.binning.domain_id}};
  meta["standardizer"] = {{"mean", ds.standardizer.mean},
                          {"stddev", ds.standardizer.stddev}};
  std::ofstream mf(dir / "meta.json");
  if (!mf) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
  mf << meta.dump(2) << "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "meta.json");
  if (!mf) throw ConfigError("missing dataset metadata " + (dir / "meta.json").string());
  json meta = json::parse(mf);
  if (meta.at("format_version").get<std::string>() != "1")
    throw std::runtime_error("unsupported dataset format version " +
                             meta.at("format_version").get<std::string>());

  LabeledDataset ds;
  ds.domain_id = meta.at("domain_id").get<std::string>();
  ds.split_tag = split_tag_from(meta.at("split_tag").get<std::string>());
  ds.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
  ds.standardized = meta.at("standardized").get<bool>();
  const json& b = meta.at("binning");
  ds.binning.n_classes = b.at("n_classes").get<std::size_t>();
  ds.binning.edges = b.at("edges").get<std::vector<double>>();
  ds.binning.domain_id = b.at("domain_id").get<std::string>();
  const json& s = meta.at("standardizer");
  ds.standardizer.mean = s.at("mean").get<std::vector<double>>();
  ds.standardizer.stddev = s.at("stddev").get<std::vector<double>>();

  std::ifstream feat(dir / "features.csv");
  if (!feat) throw ConfigError("missing " + (dir / "features.csv").string());
  std::string line;
  if (!std::getline(feat, line))
    throw std::runtime_error("empty features.csv in " + dir.string());
  std::vector<double> buf;
  std::size_t rows = 0;
  while (std::getline(feat, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ds.feature_names.size())
      throw std::runtime_error("features.csv row " + std::to_string(rows + 1) +
                               " has " + std::to_string(cells.size()) + " columns");
    for (const auto& cell : cells) buf.push_back(std::stod(cell));
    ++rows;
  }
  ds.features.rows = rows;
  ds.features.cols = ds.feature_names.size();
  ds.features.data = std::move(buf);

  std::ifstream lab(dir / "labels.csv");
  if (!lab) throw ConfigError("missing " + (dir / "labels.csv").string());
  std::getline(lab, line);  // header
  while (std::getline(lab, line)) {
    if (line.empty()) continue;
    ds.labels.push_back(std::stoi(line));
  }
  ds.validate();
  return ds;
}

}  // namespace helios::data
