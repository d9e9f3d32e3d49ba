#pragma once

#include <cstdint>
#include <vector>

#include "motsc/core/matrix.hpp"
#include "motsc/nn/dense_net.hpp"

namespace motsc::nn {

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled: w *= (1 - lr*wd) before the Adam step
};

class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const DenseNet& net, AdamWConfig cfg = {});

  // Applies one update and bumps the net's parameter version. Throws
  // contract_error if any gradient is non-finite; the net, the moments and
  // the step count are left untouched in that case.
  void step(DenseNet& net, const Gradients& grads);

  uint64_t step_count() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

  // Checkpoint access.
  std::vector<core::Matrix>& m_w() { return m_w_; }
  std::vector<core::Matrix>& v_w() { return v_w_; }
  std::vector<std::vector<double>>& m_b() { return m_b_; }
  std::vector<std::vector<double>>& v_b() { return v_b_; }
  const std::vector<core::Matrix>& m_w() const { return m_w_; }
  const std::vector<core::Matrix>& v_w() const { return v_w_; }
  const std::vector<std::vector<double>>& m_b() const { return m_b_; }
  const std::vector<std::vector<double>>& v_b() const { return v_b_; }
  void set_step_count(uint64_t t) { t_ = t; }

 private:
  AdamWConfig cfg_;
  uint64_t t_ = 0;
  std::vector<core::Matrix> m_w_, v_w_;
  std::vector<std::vector<double>> m_b_, v_b_;
};

}  // namespace motsc::nn
