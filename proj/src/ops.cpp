#include "helios/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace helios::nn {

namespace {

thread_local std::size_t g_ce_clamps = 0;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

/// Wires the result node into the tape: parents are the inputs that
/// require grad, and `fn` pulls the result's grad into them.
void record(Tensor& result, std::vector<Tensor> inputs, std::function<void()> fn) {
  if (!NoGradGuard::grad_enabled()) return;
  bool any = false;
  for (const auto& in : inputs)
    if (in.requires_grad()) any = true;
  if (!any) return;
  result.set_requires_grad(true);
  auto node = result.node();
  for (const auto& in : inputs)
    if (in.requires_grad()) node->parents.push_back(in.node());
  node->backward_fn = std::move(fn);
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(a) + " and " + shape_str(b));
}

}  // namespace

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.ndim() != 2 || weight.ndim() != 2 || x.dim(1) != weight.dim(0))
    shape_error("dense", x.shape(), weight.shape());
  if (bias.ndim() != 1 || bias.dim(0) != weight.dim(1))
    shape_error("dense bias", bias.shape(), weight.shape());

  const std::size_t batch = x.dim(0), in = x.dim(1), out = weight.dim(1);
  Tensor y = Tensor::zeros({batch, out});
  {
    const double* xv = x.values().data();
    const double* wv = weight.values().data();
    const double* bv = bias.values().data();
    double* yv = y.values().data();
    for (std::size_t b = 0; b < batch; ++b) {
      double* yrow = yv + b * out;
      for (std::size_t o = 0; o < out; ++o) yrow[o] = bv[o];
      const double* xrow = xv + b * in;
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xrow[i];
        if (xi == 0.0) continue;
        const double* wrow = wv + i * out;
        for (std::size_t o = 0; o < out; ++o) yrow[o] += xi * wrow[o];
      }
    }
  }

  Tensor result = y;
  record(result, {x, weight, bias}, [x, weight, bias, result, batch, in, out]() {
    const double* dy = result.node()->grad.data();
    const double* xv = x.values().data();
    const double* wv = weight.values().data();
    if (weight.requires_grad()) {
      weight.node()->ensure_grad();
      double* dw = weight.node()->grad.data();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* xrow = xv + b * in;
        const double* dyrow = dy + b * out;
        for (std::size_t i = 0; i < in; ++i) {
          const double xi = xrow[i];
          if (xi == 0.0) continue;
          double* dwrow = dw + i * out;
          for (std::size_t o = 0; o < out; ++o) dwrow[o] += xi * dyrow[o];
        }
      }
    }
    if (bias.requires_grad()) {
      bias.node()->ensure_grad();
      double* db = bias.node()->grad.data();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* dyrow = dy + b * out;
        for (std::size_t o = 0; o < out; ++o) db[o] += dyrow[o];
      }
    }
    if (x.requires_grad()) {
      x.node()->ensure_grad();
      double* dx = x.node()->grad.data();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* dyrow = dy + b * out;
        double* dxrow = dx + b * in;
        for (std::size_t i = 0; i < in; ++i) {
          const double* wrow = wv + i * out;
          double acc = 0.0;
          for (std::size_t o = 0; o < out; ++o) acc += wrow[o] * dyrow[o];
          dxrow[i] += acc;
        }
      }
    }
  });
  return result;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
  if (x.ndim() != 3 || kernel.ndim() != 3 || x.dim(1) != kernel.dim(1))
    shape_error("conv1d", x.shape(), kernel.shape());
  if (bias.ndim() != 1 || bias.dim(0) != kernel.dim(0))
    shape_error("conv1d bias", bias.shape(), kernel.shape());
  if (stride == 0) throw std::invalid_argument("conv1d: stride must be positive");

  const std::size_t batch = x.dim(0), in_ch = x.dim(1), len = x.dim(2);
  const std::size_t out_ch = kernel.dim(0), k = kernel.dim(2);
  if (len + 2 * padding < k)
    throw std::invalid_argument("conv1d: kernel size " + std::to_string(k) +
                                " exceeds padded length " +
                                std::to_string(len + 2 * padding));
  const std::size_t out_len = (len + 2 * padding - k) / stride + 1;

  Tensor y = Tensor::zeros({batch, out_ch, out_len});
  {
    const double* xv = x.values().data();
    const double* kv = kernel.values().data();
    const double* bv = bias.values().data();
    double* yv = y.values().data();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t f = 0; f < out_ch; ++f) {
        double* yrow = yv + (b * out_ch + f) * out_len;
        for (std::size_t t = 0; t < out_len; ++t) {
          double acc = bv[f];
          const std::ptrdiff_t base =
              static_cast<std::ptrdiff_t>(t * stride) - static_cast<std::ptrdiff_t>(padding);
          for (std::size_t c = 0; c < in_ch; ++c) {
            const double* xrow = xv + (b * in_ch + c) * len;
            const double* krow = kv + (f * in_ch + c) * k;
            for (std::size_t j = 0; j < k; ++j) {
              const std::ptrdiff_t u = base + static_cast<std::ptrdiff_t>(j);
              if (u >= 0 && u < static_cast<std::ptrdiff_t>(len))
                acc += xrow[u] * krow[j];
            }
          }
          yrow[t] = acc;
        }
      }
    }
  }

  Tensor result = y;
  record(result, {x, kernel, bias},
         [x, kernel, bias, result, batch, in_ch, len, out_ch, k, stride, padding]() {
           const std::size_t out_len = result.dim(2);
           const double* dy = result.node()->grad.data();
           const double* xv = x.values().data();
           const double* kv = kernel.values().data();
           if (bias.requires_grad()) {
             bias.node()->ensure_grad();
             double* db = bias.node()->grad.data();
             for (std::size_t b = 0; b < batch; ++b)
               for (std::size_t f = 0; f < out_ch; ++f) {
                 const double* dyrow = dy + (b * out_ch + f) * out_len;
                 double acc = 0.0;
                 for (std::size_t t = 0; t < out_len; ++t) acc += dyrow[t];
                 db[f] += acc;
               }
           }
           if (kernel.requires_grad()) {
             kernel.node()->ensure_grad();
             double* dk = kernel.node()->grad.data();
             for (std::size_t b = 0; b < batch; ++b)
               for (std::size_t f = 0; f < out_ch; ++f) {
                 const double* dyrow = dy + (b * out_ch + f) * out_len;
                 for (std::size_t c = 0; c < in_ch; ++c) {
                   const double* xrow = xv + (b * in_ch + c) * len;
                   double* dkrow = dk + (f * in_ch + c) * k;
                   for (std::size_t t = 0; t < out_len; ++t) {
                     const double g = dyrow[t];
                     if (g == 0.0) continue;
                     const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t * stride) -
                                                 static_cast<std::ptrdiff_t>(padding);
                     for (std::size_t j = 0; j < k; ++j) {
                       const std::ptrdiff_t u = base + static_cast<std::ptrdiff_t>(j);
                       if (u >= 0 && u < static_cast<std::ptrdiff_t>(len))
                         dkrow[j] += xrow[u] * g;
                     }
                   }
                 }
               }
           }
           if (x.requires_grad()) {
             x.node()->ensure_grad();
             double* dx = x.node()->grad.data();
             for (std::size_t b = 0; b < batch; ++b)
               for (std::size_t f = 0; f < out_ch; ++f) {
                 const double* dyrow = dy + (b * out_ch + f) * out_len;
                 for (std::size_t c = 0; c < in_ch; ++c) {
                   double* dxrow = dx + (b * in_ch + c) * len;
                   const double* krow = kv + (f * in_ch + c) * k;
                   for (std::size_t t = 0; t < out_len; ++t) {
                     const double g = dyrow[t];
                     if (g == 0.0) continue;
                     const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t * stride) -
                                                 static_cast<std::ptrdiff_t>(padding);
                     for (std::size_t j = 0; j < k; ++j) {
                       const std::ptrdiff_t u = base + static_cast<std::ptrdiff_t>(j);
                       if (u >= 0 && u < static_cast<std::ptrdiff_t>(len))
                         dxrow[u] += krow[j] * g;
                     }
                   }
                 }
               }
           }
         });
  return result;
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   RunningStats* running, BatchNormMode mode,
                   double eps, double momentum) {
  if (x.ndim() != 2 && x.ndim() != 3)
    throw std::invalid_argument("batchnorm1d: expected 2-D or 3-D input, got " +
                                shape_str(x.shape()));
  const std::size_t batch = x.dim(0), ch = x.dim(1);
  const std::size_t len = x.ndim() == 3 ? x.dim(2) : 1;
  if (gamma.size() != ch || beta.size() != ch)
    shape_error("batchnorm1d affine", gamma.shape(), x.shape());
  if (mode == BatchNormMode::Batch && batch < 2)
    throw std::invalid_argument("batchnorm1d: batch statistics need batch >= 2, got " +
                                std::to_string(batch));
  if (mode == BatchNormMode::Running && running == nullptr)
    throw std::invalid_argument("batchnorm1d: running mode needs running statistics");

  const std::size_t per_ch = batch * len;
  std::vector<double> mean(ch, 0.0), var(ch, 0.0);
  const double* xv = x.values().data();
  if (mode == BatchNormMode::Batch) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c) {
        const double* xrow = xv + (b * ch + c) * len;
        for (std::size_t l = 0; l < len; ++l) mean[c] += xrow[l];
      }
    for (std::size_t c = 0; c < ch; ++c) mean[c] /= static_cast<double>(per_ch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c) {
        const double* xrow = xv + (b * ch + c) * len;
        for (std::size_t l = 0; l < len; ++l) {
          const double d = xrow[l] - mean[c];
          var[c] += d * d;
        }
      }
    for (std::size_t c = 0; c < ch; ++c) var[c] /= static_cast<double>(per_ch);
    if (running != nullptr) {
      if (running->mean.size() != ch || running->var.size() != ch)
        throw std::invalid_argument("batchnorm1d: running stats have " +
                                    std::to_string(running->mean.size()) +
                                    " channels, input has " + std::to_string(ch));
      for (std::size_t c = 0; c < ch; ++c) {
        running->mean[c] = (1.0 - momentum) * running->mean[c] + momentum * mean[c];
        running->var[c] = (1.0 - momentum) * running->var[c] + momentum * var[c];
      }
    }
  } else {
    if (running->mean.size() != ch || running->var.size() != ch)
      throw std::invalid_argument("batchnorm1d: running stats have " +
                                  std::to_string(running->mean.size()) +
                                  " channels, input has " + std::to_string(ch));
    mean = running->mean;
    var = running->var;
  }

  std::vector<double> inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);

  Tensor y = Tensor::zeros(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  {
    const double* gv = gamma.values().data();
    const double* bv = beta.values().data();
    double* yv = y.values().data();
    double* hv = xhat->data();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t off = (b * ch + c) * len;
        for (std::size_t l = 0; l < len; ++l) {
          const double h = (xv[off + l] - mean[c]) * inv_std[c];
          hv[off + l] = h;
          yv[off + l] = gv[c] * h + bv[c];
        }
      }
  }

  const bool batch_stats = mode == BatchNormMode::Batch;
  Tensor result = y;
  record(result, {x, gamma, beta},
         [x, gamma, beta, result, xhat, inv_std, batch, ch, len, batch_stats]() {
           const std::size_t per_ch = batch * len;
           const double* dy = result.node()->grad.data();
           const double* hv = xhat->data();
           const double* gv = gamma.values().data();

           if (gamma.requires_grad()) {
             gamma.node()->ensure_grad();
             double* dg = gamma.node()->grad.data();
             for (std::size_t b = 0; b < batch; ++b)
               for (std::size_t c = 0; c < ch; ++c) {
                 const std::size_t off = (b * ch + c) * len;
                 double acc = 0.0;
                 for (std::size_t l = 0; l < len; ++l) acc += dy[off + l] * hv[off + l];
                 dg[c] += acc;
               }
           }
           if (beta.requires_grad()) {
             beta.node()->ensure_grad();
             double* db = beta.node()->grad.data();
             for (std::size_t b = 0; b < batch; ++b)
               for (std::size_t c = 0; c < ch; ++c) {
                 const std::size_t off = (b * ch + c) * len;
                 double acc = 0.0;
                 for (std::size_t l = 0; l < len; ++l) acc += dy[off + l];
                 db[c] += acc;
               }
           }
           if (!x.requires_grad()) return;
           x.node()->ensure_grad();
           double* dx = x.node()->grad.data();
           if (!batch_stats) {
             // Running statistics are constants: pure affine map.
             for (std::size_t b = 0; b < batch; ++b)
               for (std::size_t c = 0; c < ch; ++c) {
                 const std::size_t off = (b * ch + c) * len;
                 const double s = gv[c] * inv_std[c];
                 for (std::size_t l = 0; l < len; ++l) dx[off + l] += s * dy[off + l];
               }
             return;
           }
           // Batch mode: mean and variance depend on x.
           std::vector<double> sum_dy(ch, 0.0), sum_dy_h(ch, 0.0);
           for (std::size_t b = 0; b < batch; ++b)
             for (std::size_t c = 0; c < ch; ++c) {
               const std::size_t off = (b * ch + c) * len;
               for (std::size_t l = 0; l < len; ++l) {
                 sum_dy[c] += dy[off + l];
                 sum_dy_h[c] += dy[off + l] * hv[off + l];
               }
             }
           const double inv_n = 1.0 / static_cast<double>(per_ch);
           for (std::size_t b = 0; b < batch; ++b)
             for (std::size_t c = 0; c < ch; ++c) {
               const std::size_t off = (b * ch + c) * len;
               const double s = gv[c] * inv_std[c];
               for (std::size_t l = 0; l < len; ++l) {
                 const double term = dy[off + l] - inv_n * sum_dy[c] -
                                     hv[off + l] * inv_n * sum_dy_h[c];
                 dx[off + l] += s * term;
               }
             }
         });
  return result;
}

Tensor relu(const Tensor& x) {
  Tensor y = Tensor::zeros(x.shape());
  const double* xv = x.values().data();
  double* yv = y.values().data();
  for (std::size_t i = 0; i < x.size(); ++i) yv[i] = xv[i] > 0.0 ? xv[i] : 0.0;

  Tensor result = y;
  record(result, {x}, [x, result]() {
    if (!x.requires_grad()) return;
    x.node()->ensure_grad();
    const double* dy = result.node()->grad.data();
    const double* xv2 = x.values().data();
    double* dx = x.node()->grad.data();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (xv2[i] > 0.0) dx[i] += dy[i];
  });
  return result;
}

Tensor reshape(const Tensor& x, const Shape& shape) {
  if (shape_numel(shape) != x.size())
    shape_error("reshape", x.shape(), shape);
  Tensor y = Tensor::from(shape, x.values());

  Tensor result = y;
  record(result, {x}, [x, result]() {
    if (!x.requires_grad()) return;
    x.node()->ensure_grad();
    const double* dy = result.node()->grad.data();
    double* dx = x.node()->grad.data();
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i];
  });
  return result;
}

Tensor flatten(const Tensor& x) {
  if (x.ndim() < 2)
    throw std::invalid_argument("flatten: expected at least 2-D input, got " +
                                shape_str(x.shape()));
  const std::size_t batch = x.dim(0);
  const std::size_t rest = x.size() / batch;
  Tensor y = Tensor::from({batch, rest}, x.values());

  Tensor result = y;
  record(result, {x}, [x, result]() {
    if (!x.requires_grad()) return;
    x.node()->ensure_grad();
    const double* dy = result.node()->grad.data();
    double* dx = x.node()->grad.data();
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i];
  });
  return result;
}

Tensor softmax(const Tensor& logits) {
  if (logits.ndim() != 2)
    throw std::invalid_argument("softmax: expected [batch, classes], got " +
                                shape_str(logits.shape()));
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  const double* zv = logits.values().data();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (std::isnan(zv[i])) throw std::invalid_argument("softmax: NaN logit");

  Tensor y = Tensor::zeros(logits.shape());
  double* pv = y.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* z = zv + b * k;
    double* p = pv + b * k;
    double zmax = z[0];
    for (std::size_t i = 1; i < k; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = std::exp(z[i] - zmax);
      sum += p[i];
    }
    for (std::size_t i = 0; i < k; ++i) p[i] /= sum;
  }

  Tensor result = y;
  record(result, {logits}, [logits, result, batch, k]() {
    if (!logits.requires_grad()) return;
    logits.node()->ensure_grad();
    const double* dy = result.node()->grad.data();
    const double* p = result.values().data();
    double* dz = logits.node()->grad.data();
    for (std::size_t b = 0; b < batch; ++b) {
      const double* prow = p + b * k;
      const double* dyrow = dy + b * k;
      double dot = 0.0;
      for (std::size_t i = 0; i < k; ++i) dot += dyrow[i] * prow[i];
      double* dzrow = dz + b * k;
      for (std::size_t i = 0; i < k; ++i) dzrow[i] += prow[i] * (dyrow[i] - dot);
    }
  });
  return result;
}

namespace {

void check_labels(const Tensor& p, const std::vector<int>& labels, const char* op) {
  if (p.ndim() != 2)
    throw std::invalid_argument(std::string(op) + ": expected [batch, classes], got " +
                                shape_str(p.shape()));
  if (labels.size() != p.dim(0))
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(p.dim(0)));
  const int k = static_cast<int>(p.dim(1));
  for (int y : labels)
    if (y < 0 || y >= k)
      throw std::invalid_argument(std::string(op) + ": label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(k) + ")");
}

}  // namespace

Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  check_labels(probs, labels, "cross_entropy");
  const std::size_t batch = probs.dim(0), k = probs.dim(1);
  const double* pv = probs.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += pv[b * k + i];
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("cross_entropy: row " + std::to_string(b) +
                                  " sums to " + std::to_string(sum) + ", not 1");
  }

  constexpr double kFloor = 1e-15;
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double p = pv[b * k + static_cast<std::size_t>(labels[b])];
    if (p <= 0.0) {
      p = kFloor;
      ++g_ce_clamps;
    }
    loss -= std::log(p);
  }
  loss /= static_cast<double>(batch);

  Tensor result = Tensor::scalar_of(loss);
  record(result, {probs}, [probs, result, labels, batch, k]() {
    if (!probs.requires_grad()) return;
    probs.node()->ensure_grad();
    const double g = result.node()->grad[0];
    const double* pv2 = probs.values().data();
    double* dp = probs.node()->grad.data();
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t at = b * k + static_cast<std::size_t>(labels[b]);
      const double p = pv2[at] > 0.0 ? pv2[at] : 1e-15;
      dp[at] -= g / (p * static_cast<double>(batch));
    }
  });
  return result;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  check_labels(logits, labels, "softmax_cross_entropy");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  const double* zv = logits.values().data();

  auto probs = std::make_shared<std::vector<double>>(logits.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* z = zv + b * k;
    double* p = probs->data() + b * k;
    double zmax = z[0];
    for (std::size_t i = 1; i < k; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = std::exp(z[i] - zmax);
      sum += p[i];
    }
    const double log_sum = std::log(sum);
    for (std::size_t i = 0; i < k; ++i) p[i] /= sum;
    // -log p[label] in a numerically exact form.
    loss += log_sum - (z[labels[b]] - zmax);
  }
  loss /= static_cast<double>(batch);

  Tensor result = Tensor::scalar_of(loss);
  record(result, {logits}, [logits, result, probs, labels, batch, k]() {
    if (!logits.requires_grad()) return;
    logits.node()->ensure_grad();
    const double g = result.node()->grad[0] / static_cast<double>(batch);
    const double* p = probs->data();
    double* dz = logits.node()->grad.data();
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = b * k;
      for (std::size_t i = 0; i < k; ++i) dz[off + i] += g * p[off + i];
      dz[off + static_cast<std::size_t>(labels[b])] -= g;
    }
  });
  return result;
}

std::size_t ce_clamp_count() { return g_ce_clamps; }
void reset_ce_clamp_count() { g_ce_clamps = 0; }

}  // namespace helios::nn
