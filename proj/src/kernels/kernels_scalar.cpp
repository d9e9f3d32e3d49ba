#include <cmath>

#include "motsc/kernels/kernels.hpp"

namespace motsc::kernels {
namespace {

void gemm_nt_scalar(const double* a, const double* w, const double* bias, double* c,
                    int rows, int k, int out) {
  for (int r = 0; r < rows; ++r) {
    const double* ar = a + static_cast<size_t>(r) * k;
    double* cr = c + static_cast<size_t>(r) * out;
    for (int o = 0; o < out; ++o) {
      const double* wo = w + static_cast<size_t>(o) * k;
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += ar[j] * wo[j];
      cr[o] = bias ? acc + bias[o] : acc;
    }
  }
}

void gemm_tn_acc_scalar(const double* dy, const double* x, double* dw, double* db,
                        int rows, int out, int k) {
  for (int r = 0; r < rows; ++r) {
    const double* dyr = dy + static_cast<size_t>(r) * out;
    const double* xr = x + static_cast<size_t>(r) * k;
    for (int o = 0; o < out; ++o) {
      const double s = dyr[o];
      if (db) db[o] += s;
      double* dwo = dw + static_cast<size_t>(o) * k;
      for (int j = 0; j < k; ++j) dwo[j] += s * xr[j];
    }
  }
}

void leaky_relu_fwd_scalar(const double* z, double* y, int n, double slope) {
  for (int i = 0; i < n; ++i) y[i] = z[i] >= 0.0 ? z[i] : slope * z[i];
}

void leaky_relu_bwd_scalar(const double* z, const double* dy, double* dz, int n, double slope) {
  for (int i = 0; i < n; ++i) dz[i] = z[i] >= 0.0 ? dy[i] : slope * dy[i];
}

void adamw_update_scalar(double* w, const double* g, double* m, double* v, int n,
                         double lr, double beta1, double beta2, double eps,
                         double weight_decay, double inv_bias1, double inv_bias2) {
  const double decay = 1.0 - lr * weight_decay;
  for (int i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] * inv_bias1;
    const double vhat = v[i] * inv_bias2;
    w[i] = w[i] * decay - lr * mhat / (std::sqrt(vhat) + eps);
  }
}

double reduce_sum_scalar(const double* x, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double reduce_sumsq_shifted_scalar(const double* x, int n, double shift) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x[i] - shift;
    acc += d * d;
  }
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{
      "scalar",
      gemm_nt_scalar,
      gemm_tn_acc_scalar,
      leaky_relu_fwd_scalar,
      leaky_relu_bwd_scalar,
      adamw_update_scalar,
      reduce_sum_scalar,
      reduce_sumsq_shifted_scalar,
  };
  return ops;
}

}  // namespace motsc::kernels
