#include "helios/training.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "helios/ops.hpp"
#include "helios/rng.hpp"

namespace helios::train {
namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void check_dataset_against_spec(const data::LabeledDataset& ds, const model::ArchitectureSpec& spec,
                                const char* which) {
  ds.validate();
  if (ds.n_features() != static_cast<std::size_t>(spec.n_features)) {
    throw std::invalid_argument(std::string("train: ") + which + " has " +
                                std::to_string(ds.n_features()) + " features, model expects " +
                                std::to_string(spec.n_features));
  }
  if (ds.binning.n_classes != static_cast<std::size_t>(spec.n_classes)) {
    throw std::invalid_argument(std::string("train: ") + which + " has " +
                                std::to_string(ds.binning.n_classes) + " classes, model expects " +
                                std::to_string(spec.n_classes));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
}

std::size_t RunTrace::total_iterations() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.iterations;
  return n;
}

double RunTrace::total_seconds() const {
  double s = 0.0;
  for (const auto& r : records) s += r.seconds;
  return s;
}

double RunTrace::its_per_sec() const {
  const double s = total_seconds();
  if (s <= 0.0) {
    throw std::runtime_error("trace: zero-duration run has no iteration rate");
  }
  return static_cast<double>(total_iterations()) / s;
}

std::vector<double> RunTrace::val_accuracies() const {
  std::vector<double> acc;
  acc.reserve(records.size());
  for (const auto& r : records) acc.push_back(r.val_acc);
  return acc;
}

void RunTrace::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("trace: cannot write " + path.string());
  }
  out << "epoch,train_loss,train_acc,val_acc,seconds,iterations\n";
  for (const auto& r : records) {
    out << r.epoch << "," << format_double(r.train_loss) << "," << format_double(r.train_acc)
        << "," << format_double(r.val_acc) << "," << format_double(r.seconds) << ","
        << r.iterations << "\n";
  }
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                              std::size_t batch_size) {
  if (n < 2) throw std::invalid_argument("train: need at least 2 rows for batch statistics");
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = std::min(n, start + batch_size);
    if (n - end == 1) end = n;  // absorb a would-be single-row tail
    ranges.emplace_back(start, end);
    start = end;
  }
  return ranges;
}

namespace detail {

ModelState capture(const model::Model& m) {
  ModelState state;
  for (const auto& p : m.parameters()) state.params.push_back(p.tensor.values());
  state.bn_stats = m.bn_stats();
  return state;
}

void restore_state(model::Model& m, const ModelState& state) {
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    m.parameters()[i].tensor.values() = state.params[i];
  }
  m.bn_stats() = state.bn_stats;
}

RunTrace run_epochs(model::Model& model, const Matrix& train_x, const std::vector<int>& train_y,
                    const data::LabeledDataset& val, const TrainConfig& cfg,
                    nn::BatchNormMode mode, const std::string& trace_mode,
                    ModelState* best_state) {
  nn::Adam adam({cfg.lr});
  RunTrace trace;
  trace.mode = trace_mode;
  const std::size_t n = train_x.rows;
  auto& params = model.parameters();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto ranges = batch_ranges(n, cfg.batch_size);

  int epochs_since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (cfg.shuffle) {
      Rng rng(derive_seed(cfg.seed, 0x65706f6368, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    const double t0 = now_seconds();
    for (const auto& [begin, end] : ranges) {
      const std::size_t rows = end - begin;
      nn::Tensor x = nn::Tensor::zeros({rows, train_x.cols});
      std::vector<int> y(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* src = train_x.row(order[begin + r]);
        std::copy(src, src + train_x.cols, x.values().begin() + static_cast<std::ptrdiff_t>(r * train_x.cols));
        y[r] = train_y[order[begin + r]];
      }

      nn::Tensor logits = model.forward(x, mode);
      nn::Tensor loss = nn::softmax_cross_entropy(logits, y);
      nn::backward(loss);
      adam.step(params);

      loss_sum += loss.item() * static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* row = logits.values().data() + r * logits.dim(1);
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.dim(1); ++c) {
          if (row[c] > row[best]) best = c;
        }
        if (static_cast<int>(best) == y[r]) ++correct;
      }
    }
    const double seconds = now_seconds() - t0;

    const double val_acc = evaluate_epoch(model, val).second;
    trace.records.push_back({epoch, loss_sum / static_cast<double>(n),
                             static_cast<double>(correct) / static_cast<double>(n), val_acc,
                             seconds, ranges.size()});

    if (trace.best_epoch < 0 || val_acc > trace.best_val_acc) {
      trace.best_epoch = epoch;
      trace.best_val_acc = val_acc;
      if (best_state != nullptr) *best_state = capture(model);
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.patience) {
      break;
    }
  }
  return trace;
}

}  // namespace detail

TrainResult train_source(model::Model& model, const data::LabeledDataset& train,
                         const data::LabeledDataset& val, const TrainConfig& cfg) {
  cfg.validate();
  check_dataset_against_spec(train, model.spec(), "train split");
  check_dataset_against_spec(val, model.spec(), "val split");
  if (train.feature_names != val.feature_names) {
    throw std::invalid_argument("train: train/val feature names differ");
  }

  for (auto& p : model.parameters()) p.set_trainable(true);

  detail::ModelState best;
  RunTrace trace = detail::run_epochs(model, train.features, train.labels, val, cfg,
                                      nn::BatchNormMode::Batch, "scratch", &best);
  detail::restore_state(model, best);

  // Standardizer recorded in the checkpoint must describe the model's
  // input space: identity when the pipeline left features raw.
  data::Standardizer stats;
  if (train.standardized) {
    stats = train.standardizer;
  } else {
    stats.mean.assign(train.n_features(), 0.0);
    stats.stddev.assign(train.n_features(), 1.0);
  }

  model::Provenance prov;
  prov.domain_id = train.domain_id;
  prov.seed = cfg.seed;
  prov.epochs = static_cast<int>(trace.records.size());

  TrainResult result;
  result.checkpoint = model::snapshot(model, stats, train.feature_names, train.binning, prov);
  result.trace = std::move(trace);
  return result;
}

std::pair<double, double> evaluate_epoch(model::Model& model, const data::LabeledDataset& data) {
  data.validate();
  if (data.size() == 0) {
    throw std::invalid_argument("eval: dataset is empty");
  }
  nn::NoGradGuard guard;
  constexpr std::size_t kChunk = 512;
  const std::size_t n = data.size();
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t rows = std::min(kChunk, n - start);
    nn::Tensor x = nn::Tensor::from(
        {rows, data.n_features()},
        std::vector<double>(data.features.row(start), data.features.row(start) + rows * data.n_features()));
    std::vector<int> y(data.labels.begin() + static_cast<std::ptrdiff_t>(start),
                       data.labels.begin() + static_cast<std::ptrdiff_t>(start + rows));
    nn::Tensor logits = model.forward(x, nn::BatchNormMode::Running);
    nn::Tensor loss = nn::softmax_cross_entropy(logits, y);
    loss_sum += loss.item() * static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = logits.values().data() + r * logits.dim(1);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.dim(1); ++c) {
        if (row[c] > row[best]) best = c;
      }
      if (static_cast<int>(best) == y[r]) ++correct;
    }
  }
  return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

}  // namespace helios::train
