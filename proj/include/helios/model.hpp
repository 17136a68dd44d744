#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "helios/adam.hpp"
#include "helios/core.hpp"
#include "helios/ops.hpp"

namespace helios::model {

struct ConvBlockSpec {
  int channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
};

/// Shape of the Conv/BN/FC classifier. The network is a stack of
/// Conv1D+BN+ReLU blocks over the feature row (viewed as a 1-channel
/// sequence), flattened into exactly two FC layers: hidden + output.
struct ArchitectureSpec {
  int n_features = 6;
  std::vector<ConvBlockSpec> conv_blocks = {{16, 3, 1, 1}, {32, 3, 1, 1}};
  int fc_hidden = 64;
  int n_classes = 5;
  std::string activation = "relu";

  void validate() const;
  /// Sequence length after block i (0 = input length n_features).
  int length_after(std::size_t blocks) const;
  /// Width of the flattened conv output feeding the hidden FC layer.
  int flatten_width() const;

  bool operator==(const ArchitectureSpec& other) const;
};

/// The classifier itself: owns named parameters and per-BN running
/// statistics. Parameter names are conv<i>.weight/.bias, bn<i>.gamma/
/// .beta (1-based i), fc1.weight/.bias, fc2.weight/.bias; the fc pair is
/// always the final two parameterized layers.
class Model {
 public:
  /// He-uniform weights, zero biases, gamma=1/beta=0, deterministically
  /// from seed.
  Model(ArchitectureSpec spec, std::uint64_t seed);

  const ArchitectureSpec& spec() const { return spec_; }

  /// Logits [batch, n_classes] from x [batch, n_features]. Batch mode
  /// normalizes with batch statistics and folds them into the running
  /// stats; Running mode reads the stored stats (evaluation / frozen BN).
  nn::Tensor forward(const nn::Tensor& x, nn::BatchNormMode mode);

  /// Eval-mode logits without recording a tape.
  Matrix forward_eval(const Matrix& x);
  /// argmax of eval-mode logits, one label per row.
  std::vector<int> predict(const Matrix& x);

  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  nn::Parameter& parameter(const std::string& name);

  std::vector<nn::RunningStats>& bn_stats() { return bn_stats_; }
  const std::vector<nn::RunningStats>& bn_stats() const { return bn_stats_; }

  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;

 private:
  ArchitectureSpec spec_;
  std::vector<nn::Parameter> params_;
  std::vector<nn::RunningStats> bn_stats_;
};

}  // namespace helios::model
