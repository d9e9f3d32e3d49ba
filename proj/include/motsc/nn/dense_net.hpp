#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "motsc/core/matrix.hpp"
#include "motsc/core/rng.hpp"

namespace motsc::nn {

// One dense layer. The transpose wt is kept in sync with w so the backward
// pass can route dX through the same gemm_nt kernel as the forward pass.
struct Layer {
  int in = 0;
  int out = 0;
  core::Matrix w;   // out x in
  core::Matrix wt;  // in x out
  std::vector<double> b;

  void refresh_transpose();
};

struct Gradients {
  std::vector<core::Matrix> dw;
  std::vector<std::vector<double>> db;

  void zero();
};

// Activations captured during forward for a later backward. Tied to the
// parameter version they were computed with; backward rejects stale traces.
struct BatchTrace {
  uint64_t param_version = 0;
  int batch = 0;
  std::vector<core::Matrix> inputs;    // input to layer l (batch x in_l)
  std::vector<core::Matrix> pre_acts;  // z of hidden layer l (batch x out_l)
};

// Fully-connected input -> 256 -> 256 -> output network, LeakyReLU(0.01) on
// the hidden layers, linear output, float64 throughout.
class DenseNet {
 public:
  static constexpr int kHidden = 256;
  static constexpr double kLeakySlope = 0.01;

  DenseNet() = default;
  DenseNet(int input_dim, int output_dim);

  // He-uniform: w ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases zero. Draws
  // happen layer by layer, row-major, so a fixed seed gives fixed weights.
  void init_he_uniform(uint64_t seed);

  uint64_t init_seed() const { return init_seed_; }
  void set_init_seed(uint64_t seed) { init_seed_ = seed; }  // checkpoint load

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }  // commit after editing

  uint64_t param_version() const { return param_version_; }
  size_t param_count() const;

  // y: batch x output_dim (resized as needed). trace may be null when no
  // backward will follow.
  void forward(const core::Matrix& x, core::Matrix& y, BatchTrace* trace = nullptr) const;
  std::vector<double> forward1(std::span<const double> x) const;

  // Accumulates parameter gradients for dL/dY into grads. The input gradient
  // of the first layer is never needed and is not computed.
  void backward(const BatchTrace& trace, const core::Matrix& dy, Gradients& grads) const;

  Gradients make_gradients() const;

  // Call after mutating parameters directly (optimizer step, checkpoint
  // load): bumps the version and rebuilds the cached transposes.
  void commit_parameter_change();

 private:
  std::vector<Layer> layers_;
  uint64_t param_version_ = 0;
  uint64_t init_seed_ = 0;
};

}  // namespace motsc::nn
