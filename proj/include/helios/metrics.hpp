#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "helios/training.hpp"

namespace helios::eval {

/// Classification quality on one dataset. Confusion matrix is row-major
/// with rows = true class, cols = predicted class.
struct Metrics {
  std::size_t n_classes = 0;
  std::size_t n_samples = 0;
  std::vector<std::size_t> confusion;
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::map<std::string, std::string> metadata;  // domain pair, arm, scope, ...

  std::size_t confusion_at(std::size_t t, std::size_t p) const {
    return confusion[t * n_classes + p];
  }
};

/// Confusion counts, accuracy, per-class precision/recall/F1 (0 when
/// undefined), macro and support-weighted F1.
Metrics compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                        std::size_t n_classes);

/// Deterministic JSON emission (no timings, no environment) so repeated
/// runs produce byte-identical files.
void save_metrics_json(const Metrics& m, const std::filesystem::path& path);
Metrics load_metrics_json(const std::filesystem::path& path);

/// Flat CSV row for table assembly; pair with metrics_csv_header().
std::string metrics_csv_header();
std::string metrics_csv_row(const Metrics& m);

struct SaturationResult {
  int epoch = 0;
  bool saturated = false;  // false: trace ended before the window could confirm
};

/// First epoch whose val accuracy is within epsilon of the best over the
/// next `window` epochs. Falls back to the last epoch (saturated=false)
/// when no epoch qualifies or the trace is shorter than the window.
SaturationResult epochs_to_saturation(const std::vector<double>& val_acc, int window = 10,
                                      double epsilon = 0.005);
SaturationResult epochs_to_saturation(const train::RunTrace& trace, int window = 10,
                                      double epsilon = 0.005);

struct ThroughputResult {
  double its_per_sec = 0.0;
  std::size_t iterations = 0;
  double seconds = 0.0;
};

/// Seconds from an arbitrary monotonic clock.
using ClockFn = std::function<double()>;

/// Runs `epoch` (returning its optimizer-step count) n_epochs + 1 times;
/// the first call warms caches and is excluded from the rate. Requires
/// the single-threaded mode (HELIOS_THREADS=1) for comparability.
ThroughputResult measure_throughput(const std::function<std::size_t()>& epoch,
                                    std::size_t n_epochs, ClockFn clock = {});

}  // namespace helios::eval
