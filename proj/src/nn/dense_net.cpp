#include "motsc/nn/dense_net.hpp"

#include <cmath>

#include "motsc/core/error.hpp"
#include "motsc/kernels/kernels.hpp"

namespace motsc::nn {

void Layer::refresh_transpose() {
  wt = core::Matrix(in, out);
  for (int o = 0; o < out; ++o) {
    for (int j = 0; j < in; ++j) wt.at(j, o) = w.at(o, j);
  }
}

void Gradients::zero() {
  for (auto& m : dw) m.fill(0.0);
  for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

DenseNet::DenseNet(int input_dim, int output_dim) {
  if (input_dim <= 0 || output_dim <= 0)
    throw contract_error("DenseNet: dimensions must be positive");
  const int dims[4] = {input_dim, kHidden, kHidden, output_dim};
  for (int l = 0; l < 3; ++l) {
    Layer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.w = core::Matrix(layer.out, layer.in);
    layer.b.assign(layer.out, 0.0);
    layer.refresh_transpose();
    layers_.push_back(std::move(layer));
  }
  param_version_ = 1;
}

void DenseNet::init_he_uniform(uint64_t seed) {
  init_seed_ = seed;
  core::Rng rng(seed);
  for (auto& layer : layers_) {
    const double bound = std::sqrt(6.0 / layer.in);
    for (double& w : layer.w.data) w = bound * (2.0 * rng.uniform01() - 1.0);
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
  commit_parameter_change();
}

size_t DenseNet::param_count() const {
  size_t n = 0;
  for (const auto& layer : layers_) n += layer.w.data.size() + layer.b.size();
  return n;
}

void DenseNet::forward(const core::Matrix& x, core::Matrix& y, BatchTrace* trace) const {
  if (x.cols != input_dim()) throw contract_error("DenseNet::forward: input width mismatch");
  if (x.rows <= 0) throw contract_error("DenseNet::forward: empty batch");
  const auto& ops = kernels::active();
  const int batch = x.rows;
  const int n_layers = static_cast<int>(layers_.size());

  if (trace) {
    trace->param_version = param_version_;
    trace->batch = batch;
    trace->inputs.assign(n_layers, {});
    trace->pre_acts.assign(n_layers - 1, {});
  }

  core::Matrix cur = x;
  for (int l = 0; l < n_layers; ++l) {
    const Layer& layer = layers_[l];
    if (trace) trace->inputs[l] = cur;
    core::Matrix z(batch, layer.out);
    ops.gemm_nt(cur.data.data(), layer.w.data.data(), layer.b.data(), z.data.data(),
                batch, layer.in, layer.out);
    if (l + 1 < n_layers) {
      if (trace) trace->pre_acts[l] = z;
      core::Matrix a(batch, layer.out);
      ops.leaky_relu_fwd(z.data.data(), a.data.data(),
                         static_cast<int>(z.data.size()), kLeakySlope);
      cur = std::move(a);
    } else {
      cur = std::move(z);
    }
  }
  y = std::move(cur);
}

std::vector<double> DenseNet::forward1(std::span<const double> x) const {
  core::Matrix in(1, static_cast<int>(x.size()));
  in.set_row(0, x);
  core::Matrix out;
  forward(in, out);
  return out.data;
}

void DenseNet::backward(const BatchTrace& trace, const core::Matrix& dy,
                        Gradients& grads) const {
  if (trace.param_version != param_version_)
    throw contract_error("DenseNet::backward: trace is stale (parameters changed)");
  if (dy.rows != trace.batch || dy.cols != output_dim())
    throw contract_error("DenseNet::backward: dY shape mismatch");
  const auto& ops = kernels::active();
  const int batch = trace.batch;

  core::Matrix delta = dy;  // gradient w.r.t. the current layer's output
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const Layer& layer = layers_[l];
    ops.gemm_tn_acc(delta.data.data(), trace.inputs[l].data.data(),
                    grads.dw[l].data.data(), grads.db[l].data(), batch, layer.out,
                    layer.in);
    if (l == 0) break;
    core::Matrix dx(batch, layer.in);
    ops.gemm_nt(delta.data.data(), layer.wt.data.data(), nullptr, dx.data.data(), batch,
                layer.out, layer.in);
    ops.leaky_relu_bwd(trace.pre_acts[l - 1].data.data(), dx.data.data(), dx.data.data(),
                       static_cast<int>(dx.data.size()), kLeakySlope);
    delta = std::move(dx);
  }
}

Gradients DenseNet::make_gradients() const {
  Gradients g;
  for (const auto& layer : layers_) {
    g.dw.emplace_back(layer.out, layer.in);
    g.db.emplace_back(layer.out, 0.0);
  }
  return g;
}

void DenseNet::commit_parameter_change() {
  for (auto& layer : layers_) layer.refresh_transpose();
  ++param_version_;
}

}  // namespace motsc::nn
