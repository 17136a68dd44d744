#include "helios/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "helios/core.hpp"

namespace helios::eval {

Metrics compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                        std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("metrics: y_true has " + std::to_string(y_true.size()) +
                                " labels, y_pred has " + std::to_string(y_pred.size()));
  }
  if (y_true.empty()) {
    throw std::invalid_argument("metrics: no samples");
  }
  if (n_classes < 2) {
    throw std::invalid_argument("metrics: n_classes must be >= 2");
  }

  Metrics m;
  m.n_classes = n_classes;
  m.n_samples = y_true.size();
  m.confusion.assign(n_classes * n_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || t >= static_cast<int>(n_classes) || p >= static_cast<int>(n_classes)) {
      throw std::invalid_argument("metrics: label out of range at row " + std::to_string(i));
    }
    ++m.confusion[static_cast<std::size_t>(t) * n_classes + static_cast<std::size_t>(p)];
  }

  std::size_t diagonal = 0;
  m.precision.assign(n_classes, 0.0);
  m.recall.assign(n_classes, 0.0);
  m.f1.assign(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t tp = m.confusion_at(c, c);
    diagonal += tp;
    std::size_t support = 0, predicted = 0;
    for (std::size_t k = 0; k < n_classes; ++k) {
      support += m.confusion_at(c, k);
      predicted += m.confusion_at(k, c);
    }
    m.precision[c] = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    m.recall[c] = support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(support);
    const double pr = m.precision[c] + m.recall[c];
    m.f1[c] = pr == 0.0 ? 0.0 : 2.0 * m.precision[c] * m.recall[c] / pr;

    m.macro_f1 += m.f1[c] / static_cast<double>(n_classes);
    m.weighted_f1 += static_cast<double>(support) / static_cast<double>(m.n_samples) * m.f1[c];
  }
  m.accuracy = static_cast<double>(diagonal) / static_cast<double>(m.n_samples);
  return m;
}

void save_metrics_json(const Metrics& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["n_classes"] = m.n_classes;
  j["n_samples"] = m.n_samples;
  j["confusion"] = nlohmann::json::array();
  for (std::size_t t = 0; t < m.n_classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < m.n_classes; ++p) row.push_back(m.confusion_at(t, p));
    j["confusion"].push_back(row);
  }
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["macro_f1"] = m.macro_f1;
  j["weighted_f1"] = m.weighted_f1;
  j["metadata"] = m.metadata;

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("metrics: cannot write " + path.string());
  }
  out << j.dump(2) << "\n";
}

Metrics load_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("metrics: cannot open " + path.string());
  }
  nlohmann::json j;
  in >> j;
  Metrics m;
  m.n_classes = j["n_classes"].get<std::size_t>();
  m.n_samples = j["n_samples"].get<std::size_t>();
  for (const auto& row : j["confusion"]) {
    for (const auto& v : row) m.confusion.push_back(v.get<std::size_t>());
  }
  m.accuracy = j["accuracy"].get<double>();
  m.precision = j["precision"].get<std::vector<double>>();
  m.recall = j["recall"].get<std::vector<double>>();
  m.f1 = j["f1"].get<std::vector<double>>();
  m.macro_f1 = j["macro_f1"].get<double>();
  m.weighted_f1 = j["weighted_f1"].get<double>();
  if (j.contains("metadata")) {
    m.metadata = j["metadata"].get<std::map<std::string, std::string>>();
  }
  return m;
}

std::string metrics_csv_header() {
  return "source,target,arm,scope,accuracy,weighted_f1,macro_f1,n_samples";
}

std::string metrics_csv_row(const Metrics& m) {
  auto field = [&m](const char* key) {
    auto it = m.metadata.find(key);
    return it == m.metadata.end() ? std::string() : it->second;
  };
  std::ostringstream out;
  out << field("source") << "," << field("target") << "," << field("arm") << ","
      << field("scope") << "," << format_double(m.accuracy) << ","
      << format_double(m.weighted_f1) << "," << format_double(m.macro_f1) << "," << m.n_samples;
  return out.str();
}

SaturationResult epochs_to_saturation(const std::vector<double>& val_acc, int window,
                                      double epsilon) {
  if (val_acc.empty()) {
    throw std::invalid_argument("saturation: empty trace");
  }
  if (window < 1) {
    throw std::invalid_argument("saturation: window must be >= 1");
  }
  const int n = static_cast<int>(val_acc.size());
  for (int e = 0; e + window < n; ++e) {
    double peak_ahead = val_acc[static_cast<std::size_t>(e) + 1];
    for (int k = e + 2; k <= e + window; ++k) {
      peak_ahead = std::max(peak_ahead, val_acc[static_cast<std::size_t>(k)]);
    }
    if (peak_ahead - val_acc[static_cast<std::size_t>(e)] <= epsilon) {
      return {e, true};
    }
  }
  return {n - 1, false};
}

SaturationResult epochs_to_saturation(const train::RunTrace& trace, int window, double epsilon) {
  return epochs_to_saturation(trace.val_accuracies(), window, epsilon);
}

ThroughputResult measure_throughput(const std::function<std::size_t()>& epoch,
                                    std::size_t n_epochs, ClockFn clock) {
  if (n_epochs == 0) {
    throw std::invalid_argument("throughput: need at least one measured epoch");
  }
  if (runtime::max_threads() != 1) {
    throw std::runtime_error(
        "throughput: measurement requires single-threaded mode (HELIOS_THREADS=1)");
  }
  if (!clock) {
    clock = [] {
      return std::chrono::duration<double>(
                 std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }

  epoch();  // warm-up, excluded

  std::size_t iterations = 0;
  const double t0 = clock();
  for (std::size_t i = 0; i < n_epochs; ++i) iterations += epoch();
  const double seconds = clock() - t0;
  if (seconds <= 0.0) {
    throw std::runtime_error("throughput: zero-duration run");
  }
  return {static_cast<double>(iterations) / seconds, iterations, seconds};
}

}  // namespace helios::eval
