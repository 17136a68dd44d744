#include "helios/model.hpp"

#include <cmath>
#include <stdexcept>

#include "helios/rng.hpp"

namespace helios::model {

void ArchitectureSpec::validate() const {
  if (n_features < 1) throw std::invalid_argument("model: n_features must be >= 1");
  if (n_classes < 2) throw std::invalid_argument("model: n_classes must be >= 2");
  if (fc_hidden < 1) throw std::invalid_argument("model: fc_hidden must be >= 1");
  if (activation != "relu") {
    throw std::invalid_argument("model: unsupported activation '" + activation + "'");
  }
  int len = n_features;
  for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
    const auto& b = conv_blocks[i];
    if (b.channels < 1 || b.kernel < 1 || b.stride < 1 || b.padding < 0) {
      throw std::invalid_argument("model: conv block " + std::to_string(i + 1) +
                                  " has non-positive channels/kernel/stride or negative padding");
    }
    const int padded = len + 2 * b.padding;
    if (padded < b.kernel) {
      throw std::invalid_argument("model: conv block " + std::to_string(i + 1) +
                                  " kernel exceeds padded input length");
    }
    len = (padded - b.kernel) / b.stride + 1;
  }
}

int ArchitectureSpec::length_after(std::size_t blocks) const {
  int len = n_features;
  for (std::size_t i = 0; i < blocks && i < conv_blocks.size(); ++i) {
    const auto& b = conv_blocks[i];
    len = (len + 2 * b.padding - b.kernel) / b.stride + 1;
  }
  return len;
}

int ArchitectureSpec::flatten_width() const {
  if (conv_blocks.empty()) return n_features;
  return conv_blocks.back().channels * length_after(conv_blocks.size());
}

bool ArchitectureSpec::operator==(const ArchitectureSpec& other) const {
  if (n_features != other.n_features || fc_hidden != other.fc_hidden ||
      n_classes != other.n_classes || activation != other.activation ||
      conv_blocks.size() != other.conv_blocks.size()) {
    return false;
  }
  for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
    const auto& a = conv_blocks[i];
    const auto& b = other.conv_blocks[i];
    if (a.channels != b.channels || a.kernel != b.kernel || a.stride != b.stride ||
        a.padding != b.padding) {
      return false;
    }
  }
  return true;
}

namespace {

nn::Tensor he_uniform(nn::Shape shape, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  nn::Tensor t = nn::Tensor::zeros(std::move(shape));
  for (double& v : t.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return t;
}

}  // namespace

Model::Model(ArchitectureSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(derive_seed(seed, /*label=*/0x6d6f64656c));  // "model"

  int in_ch = 1;
  for (std::size_t i = 0; i < spec_.conv_blocks.size(); ++i) {
    const auto& b = spec_.conv_blocks[i];
    const std::string idx = std::to_string(i + 1);
    const std::size_t out_ch = static_cast<std::size_t>(b.channels);
    const std::size_t k = static_cast<std::size_t>(b.kernel);
    const std::size_t fan_in = static_cast<std::size_t>(in_ch) * k;
    params_.push_back({"conv" + idx + ".weight",
                       he_uniform({out_ch, static_cast<std::size_t>(in_ch), k}, fan_in, rng),
                       true});
    params_.push_back({"conv" + idx + ".bias", nn::Tensor::zeros({out_ch}), true});
    nn::Tensor gamma = nn::Tensor::zeros({out_ch});
    for (double& v : gamma.values()) v = 1.0;
    params_.push_back({"bn" + idx + ".gamma", gamma, true});
    params_.push_back({"bn" + idx + ".beta", nn::Tensor::zeros({out_ch}), true});
    nn::RunningStats stats;
    stats.mean.assign(out_ch, 0.0);
    stats.var.assign(out_ch, 1.0);
    bn_stats_.push_back(std::move(stats));
    in_ch = b.channels;
  }

  const std::size_t flat = static_cast<std::size_t>(spec_.flatten_width());
  const std::size_t hidden = static_cast<std::size_t>(spec_.fc_hidden);
  const std::size_t out = static_cast<std::size_t>(spec_.n_classes);
  params_.push_back({"fc1.weight", he_uniform({flat, hidden}, flat, rng), true});
  params_.push_back({"fc1.bias", nn::Tensor::zeros({hidden}), true});
  params_.push_back({"fc2.weight", he_uniform({hidden, out}, hidden, rng), true});
  params_.push_back({"fc2.bias", nn::Tensor::zeros({out}), true});

  for (auto& p : params_) p.set_trainable(true);
}

nn::Parameter& Model::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("model: no parameter named '" + name + "'");
}

nn::Tensor Model::forward(const nn::Tensor& x, nn::BatchNormMode mode) {
  if (x.ndim() != 2 || x.dim(1) != static_cast<std::size_t>(spec_.n_features)) {
    throw std::invalid_argument("model: expected input [batch, " +
                                std::to_string(spec_.n_features) + "], got " +
                                nn::shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  nn::Tensor h = nn::reshape(x, {batch, 1, static_cast<std::size_t>(spec_.n_features)});
  std::size_t p = 0;
  for (std::size_t i = 0; i < spec_.conv_blocks.size(); ++i) {
    const auto& b = spec_.conv_blocks[i];
    h = nn::conv1d(h, params_[p].tensor, params_[p + 1].tensor,
                   static_cast<std::size_t>(b.stride), static_cast<std::size_t>(b.padding));
    h = nn::batchnorm1d(h, params_[p + 2].tensor, params_[p + 3].tensor, &bn_stats_[i], mode);
    h = nn::relu(h);
    p += 4;
  }
  h = nn::flatten(h);
  h = nn::relu(nn::dense(h, params_[p].tensor, params_[p + 1].tensor));
  return nn::dense(h, params_[p + 2].tensor, params_[p + 3].tensor);
}

Matrix Model::forward_eval(const Matrix& x) {
  nn::NoGradGuard guard;
  nn::Tensor in = nn::Tensor::from({x.rows, x.cols}, x.data);
  nn::Tensor logits = forward(in, nn::BatchNormMode::Running);
  Matrix out(logits.dim(0), logits.dim(1));
  out.data = logits.values();
  return out;
}

std::vector<int> Model::predict(const Matrix& x) {
  const Matrix logits = forward_eval(x);
  std::vector<int> labels(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double* row = logits.data.data() + r * logits.cols;
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols; ++c) {
      if (row[c] > row[best]) best = c;
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

std::size_t Model::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.tensor.size();
  }
  return n;
}

}  // namespace helios::model
