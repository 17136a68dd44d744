#pragma once

#include <cstddef>
#include <vector>

#include "helios/tensor.hpp"

namespace helios::nn {

/// y = x.W + b for x [batch, in], W [in, out], b [out].
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// 1-D cross-correlation. x [batch, in_ch, len], kernel
/// [out_ch, in_ch, k], bias [out_ch]. Output length
/// (len + 2*padding - k) / stride + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride = 1, std::size_t padding = 0);

struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;
};

enum class BatchNormMode {
  Batch,    // normalize with batch statistics (training)
  Running,  // normalize with stored running statistics (eval / frozen)
};

/// Per-channel batch normalization over x [batch, ch, len] or [batch, ch].
/// Batch mode requires batch >= 2 and, when `running` is non-null, folds
/// the batch statistics into it with momentum 0.1. Running mode reads
/// `running` and never writes it.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   RunningStats* running, BatchNormMode mode,
                   double eps = 1e-5, double momentum = 0.1);

Tensor relu(const Tensor& x);

/// Same values under a new shape; element count must match.
Tensor reshape(const Tensor& x, const Shape& shape);

/// [batch, d1, d2, ...] -> [batch, d1*d2*...]
Tensor flatten(const Tensor& x);

/// Row-wise softmax of logits [batch, n_classes], max-stabilized.
Tensor softmax(const Tensor& logits);

/// Mean over the batch of -log p[label]. `probs` rows must sum to 1
/// within 1e-6. Probabilities at or below zero clamp to 1e-15 and bump
/// ce_clamp_count().
Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels);

/// Fused softmax + cross-entropy on logits [batch, n_classes]; the
/// backward pass uses (p - onehot(label)) / batch directly.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

std::size_t ce_clamp_count();
void reset_ce_clamp_count();

}  // namespace helios::nn
