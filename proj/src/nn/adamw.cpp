#include "motsc/nn/adamw.hpp"

#include <cmath>

#include "motsc/core/error.hpp"
#include "motsc/kernels/kernels.hpp"

namespace motsc::nn {

namespace {

bool all_finite(const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

}  // namespace

AdamW::AdamW(const DenseNet& net, AdamWConfig cfg) : cfg_(cfg) {
  if (cfg_.lr <= 0.0 || cfg_.eps <= 0.0 || cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 ||
      cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0 || cfg_.weight_decay < 0.0)
    throw contract_error("AdamW: invalid hyperparameters");
  for (const auto& layer : net.layers()) {
    m_w_.emplace_back(layer.out, layer.in);
    v_w_.emplace_back(layer.out, layer.in);
    m_b_.emplace_back(layer.out, 0.0);
    v_b_.emplace_back(layer.out, 0.0);
  }
}

void AdamW::step(DenseNet& net, const Gradients& grads) {
  auto& layers = net.mutable_layers();
  if (grads.dw.size() != layers.size())
    throw contract_error("AdamW::step: gradient/layer count mismatch");
  for (size_t l = 0; l < layers.size(); ++l) {
    if (!all_finite(grads.dw[l].data.data(), grads.dw[l].data.size()) ||
        !all_finite(grads.db[l].data(), grads.db[l].size()))
      throw contract_error("AdamW::step: non-finite gradient, update rejected");
  }

  const auto& ops = kernels::active();
  const uint64_t t = t_ + 1;
  const double inv_bias1 = 1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t)));
  const double inv_bias2 = 1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t)));
  for (size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    ops.adamw_update(layer.w.data.data(), grads.dw[l].data.data(), m_w_[l].data.data(),
                     v_w_[l].data.data(), static_cast<int>(layer.w.data.size()), cfg_.lr,
                     cfg_.beta1, cfg_.beta2, cfg_.eps, cfg_.weight_decay, inv_bias1,
                     inv_bias2);
    // Biases get the same decoupled decay as weights (single parameter group).
    ops.adamw_update(layer.b.data(), grads.db[l].data(), m_b_[l].data(), v_b_[l].data(),
                     static_cast<int>(layer.b.size()), cfg_.lr, cfg_.beta1, cfg_.beta2,
                     cfg_.eps, cfg_.weight_decay, inv_bias1, inv_bias2);
  }
  t_ = t;
  net.commit_parameter_change();
}

}  // namespace motsc::nn
