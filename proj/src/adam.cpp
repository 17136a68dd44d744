#include "helios/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace helios::nn {

void Adam::step(std::vector<Parameter>& params) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (Parameter& p : params) {
    if (!p.trainable) continue;
    if (!p.tensor.has_grad())
      throw std::runtime_error("adam: trainable parameter '" + p.name +
                               "' has no gradient");
    auto& w = p.tensor.values();
    auto& g = p.tensor.grad();
    Moments& mo = moments_[p.name];
    if (mo.m.size() != w.size()) {
      mo.m.assign(w.size(), 0.0);
      mo.v.assign(w.size(), 0.0);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g[i];
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = mo.m[i] / bc1;
      const double v_hat = mo.v[i] / bc2;
      w[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    p.tensor.zero_grad();
  }
}

}  // namespace helios::nn
