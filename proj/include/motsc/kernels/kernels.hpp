#pragma once

#include <string>

namespace motsc::kernels {

// Data-parallel inner loops shared by the reward ensemble and the Q-networks.
// Every operation ships as a scalar reference implementation plus an AVX2
// variant; the backend is selected once at runtime (CPUID, overridable via
// set_backend or the MOTSC_KERNELS environment variable).
//
// gemm_nt computes per-row dot products whose floating-point accumulation
// order depends only on the k loop, never on the batch tiling. Row b of the
// output is therefore bit-identical whether the row is evaluated alone or as
// part of a larger batch (covered by tests); relabeling audits rely on this.
struct Ops {
  const char* name;

  // c[r,o] = sum_k a[r,k] * w[o,k] (+ bias[o] when bias != nullptr)
  // a: rows x k, w: out x k, c: rows x out
  void (*gemm_nt)(const double* a, const double* w, const double* bias, double* c,
                  int rows, int k, int out);

  // dw[o,j] += sum_r dy[r,o] * x[r,j]; db[o] += sum_r dy[r,o] when db != nullptr
  // dy: rows x out, x: rows x k, dw: out x k
  void (*gemm_tn_acc)(const double* dy, const double* x, double* dw, double* db,
                      int rows, int out, int k);

  // y[i] = z[i] >= 0 ? z[i] : slope * z[i]
  void (*leaky_relu_fwd)(const double* z, double* y, int n, double slope);

  // dz[i] = dy[i] * (z[i] >= 0 ? 1 : slope)
  void (*leaky_relu_bwd)(const double* z, const double* dy, double* dz, int n, double slope);

  // Decoupled weight decay update:
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
  //   w = w*(1 - lr*wd) - lr * (m*inv_bias1) / (sqrt(v*inv_bias2) + eps)
  void (*adamw_update)(double* w, const double* g, double* m, double* v, int n,
                       double lr, double beta1, double beta2, double eps,
                       double weight_decay, double inv_bias1, double inv_bias2);

  double (*reduce_sum)(const double* x, int n);
  double (*reduce_sumsq_shifted)(const double* x, int n, double shift);
};

enum class Backend { kAuto, kScalar, kAvx2 };

const Ops& scalar_ops();

// nullptr when this build has no AVX2 variant or the CPU lacks AVX2+FMA.
const Ops* avx2_ops();
bool avx2_available();

// Selects the backend for subsequent active() calls. kAuto picks the best
// available. Throws config_error when the requested backend is unavailable.
void set_backend(Backend backend);
Backend parse_backend(const std::string& name);

const Ops& active();

}  // namespace motsc::kernels
