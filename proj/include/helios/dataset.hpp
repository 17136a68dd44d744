#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "helios/core.hpp"
#include "helios/timeseries.hpp"

namespace helios::data {

/// Discretization of continuous power (kW) into contiguous classes.
struct BinningScheme {
  std::size_t n_classes = 0;
  std::vector<double> edges;  // ascending, n_classes + 1 entries, edges[0] == 0
  std::string domain_id;
};

/// Equal-width edges over [0, max(power)].
BinningScheme fit_bins(const std::vector<double>& power, std::size_t n_classes,
                       const std::string& domain_id = "");

/// Class index i with edges[i] <= power < edges[i+1]; power == edges.back()
/// lands in the top class. Values above the top edge clamp to the top
/// class and, when `clamped` is given, count the event.
std::size_t assign_label(double power, const BinningScheme& scheme,
                         std::size_t* clamped = nullptr);

struct LabelResult {
  std::vector<int> labels;
  std::size_t clamped = 0;
};
LabelResult labels_for(const std::vector<double>& power, const BinningScheme& scheme);

/// Per-feature mean and stddev (population form, floored at 1e-8).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> floored_columns;  // fit-time diagnostic

  std::size_t n_features() const { return mean.size(); }
};

Standardizer fit_standardizer(const Matrix& train);
Matrix apply_standardizer(const Matrix& data, const Standardizer& stats);
Matrix invert_standardizer(const Matrix& data, const Standardizer& stats);

enum class SplitTag { Train, Val, Test };
std::string split_tag_name(SplitTag tag);
SplitTag split_tag_from(const std::string& name);

/// Feature matrix + class labels + the metadata needed to reproduce the
/// preprocessing: binning, standardizer, and whether `features` are
/// currently in standardized form.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  BinningScheme binning;
  Standardizer standardizer;
  bool standardized = true;
  SplitTag split_tag = SplitTag::Train;
  std::string domain_id;

  std::size_t size() const { return features.rows; }
  std::size_t n_features() const { return features.cols; }
  void validate() const;

  /// Features in raw (unstandardized) units regardless of current state.
  Matrix raw_features() const;
  /// Features standardized with the given statistics.
  Matrix features_standardized_with(const Standardizer& stats) const;
  /// Class frequency histogram over n_classes buckets.
  std::vector<std::size_t> label_histogram() const;
};

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};

/// Contiguous chronological split; cumulative boundaries are rounded so
/// each part differs from its exact ratio by less than one sample.
SplitSizes split_sizes(std::size_t n, const std::array<double, 3>& ratios);

struct FrameSplit {
  TimeSeriesFrame train, val, test;
};
FrameSplit split_chronological(const TimeSeriesFrame& frame,
                               const std::array<double, 3>& ratios);

struct PipelineOptions {
  std::size_t n_classes = 5;
  std::array<double, 3> ratios{0.7, 0.15, 0.15};
  bool standardize = true;
  std::string power_channel = "power_kw";
  std::string domain_id;
};

struct PreparedDomain {
  LabeledDataset train, val, test;
  std::size_t rows_dropped_nan = 0;
  std::size_t labels_clamped = 0;
};

/// Joined frame -> (train, val, test) datasets: drop NaN rows, split
/// chronologically, fit bins and standardizer on the training split,
/// label and standardize everything with them.
PreparedDomain prepare_domain(const TimeSeriesFrame& joined, const PipelineOptions& opts);

/// Dataset directory layout: features.csv + labels.csv + meta.json.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir);
LabeledDataset load_dataset(const std::filesystem::path& dir);

}  // namespace helios::data
