#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "helios/tensor.hpp"

namespace helios::nn {

/// Named model parameter. `trainable` mirrors tensor.requires_grad();
/// use Parameter::set_trainable to keep them in sync.
struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;

  void set_trainable(bool v) {
    trainable = v;
    tensor.set_requires_grad(v);
  }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Holds first/second moment buffers per
/// parameter name; step() updates trainable parameters only and zeroes
/// their gradients afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return step_; }

  void step(std::vector<Parameter>& params);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace helios::nn
