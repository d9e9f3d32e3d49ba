// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be reached through the runtime dispatch in kernels.cpp.
//
// Per-cell accumulation in gemm_nt is a fixed sequence of 4-wide FMA chunks
// plus a scalar tail, identical in the tiled and untiled paths, so results do
// not depend on batch tiling (bit-for-bit).

#include "motsc/kernels/kernels.hpp"

#if defined(MOTSC_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace motsc::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

// Single dot product with the canonical chunk order; the tiled kernel below
// follows the same order per cell.
inline double dot4(const double* a, const double* w, int k) {
  __m256d acc = _mm256_setzero_pd();
  int j = 0;
  for (; j + 4 <= k; j += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(w + j), acc);
  }
  double s = hsum(acc);
  for (; j < k; ++j) s += a[j] * w[j];
  return s;
}

void gemm_nt_avx2(const double* a, const double* w, const double* bias, double* c,
                  int rows, int k, int out) {
  const int kv = k & ~3;
  for (int r = 0; r < rows; ++r) {
    const double* ar = a + static_cast<size_t>(r) * k;
    double* cr = c + static_cast<size_t>(r) * out;
    int o = 0;
    for (; o + 4 <= out; o += 4) {
      const double* w0 = w + static_cast<size_t>(o) * k;
      const double* w1 = w0 + k;
      const double* w2 = w1 + k;
      const double* w3 = w2 + k;
      __m256d acc0 = _mm256_setzero_pd();
      __m256d acc1 = _mm256_setzero_pd();
      __m256d acc2 = _mm256_setzero_pd();
      __m256d acc3 = _mm256_setzero_pd();
      for (int j = 0; j < kv; j += 4) {
        const __m256d av = _mm256_loadu_pd(ar + j);
        acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w0 + j), acc0);
        acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w1 + j), acc1);
        acc2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w2 + j), acc2);
        acc3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w3 + j), acc3);
      }
      double s0 = hsum(acc0), s1 = hsum(acc1), s2 = hsum(acc2), s3 = hsum(acc3);
      for (int j = kv; j < k; ++j) {
        const double av = ar[j];
        s0 += av * w0[j];
        s1 += av * w1[j];
        s2 += av * w2[j];
        s3 += av * w3[j];
      }
      if (bias) {
        s0 += bias[o];
        s1 += bias[o + 1];
        s2 += bias[o + 2];
        s3 += bias[o + 3];
      }
      cr[o] = s0;
      cr[o + 1] = s1;
      cr[o + 2] = s2;
      cr[o + 3] = s3;
    }
    for (; o < out; ++o) {
      double s = dot4(ar, w + static_cast<size_t>(o) * k, k);
      cr[o] = bias ? s + bias[o] : s;
    }
  }
}

void gemm_tn_acc_avx2(const double* dy, const double* x, double* dw, double* db,
                      int rows, int out, int k) {
  const int kv = k & ~3;
  int o = 0;
  for (; o + 4 <= out; o += 4) {
    double* dw0 = dw + static_cast<size_t>(o) * k;
    double* dw1 = dw0 + k;
    double* dw2 = dw1 + k;
    double* dw3 = dw2 + k;
    for (int r = 0; r < rows; ++r) {
      const double* dyr = dy + static_cast<size_t>(r) * out;
      const double* xr = x + static_cast<size_t>(r) * k;
      const double s0 = dyr[o], s1 = dyr[o + 1], s2 = dyr[o + 2], s3 = dyr[o + 3];
      if (db) {
        db[o] += s0;
        db[o + 1] += s1;
        db[o + 2] += s2;
        db[o + 3] += s3;
      }
      const __m256d b0 = _mm256_set1_pd(s0);
      const __m256d b1 = _mm256_set1_pd(s1);
      const __m256d b2 = _mm256_set1_pd(s2);
      const __m256d b3 = _mm256_set1_pd(s3);
      for (int j = 0; j < kv; j += 4) {
        const __m256d xv = _mm256_loadu_pd(xr + j);
        _mm256_storeu_pd(dw0 + j, _mm256_fmadd_pd(b0, xv, _mm256_loadu_pd(dw0 + j)));
        _mm256_storeu_pd(dw1 + j, _mm256_fmadd_pd(b1, xv, _mm256_loadu_pd(dw1 + j)));
        _mm256_storeu_pd(dw2 + j, _mm256_fmadd_pd(b2, xv, _mm256_loadu_pd(dw2 + j)));
        _mm256_storeu_pd(dw3 + j, _mm256_fmadd_pd(b3, xv, _mm256_loadu_pd(dw3 + j)));
      }
      for (int j = kv; j < k; ++j) {
        const double xv = xr[j];
        dw0[j] += s0 * xv;
        dw1[j] += s1 * xv;
        dw2[j] += s2 * xv;
        dw3[j] += s3 * xv;
      }
    }
  }
  for (; o < out; ++o) {
    double* dwo = dw + static_cast<size_t>(o) * k;
    for (int r = 0; r < rows; ++r) {
      const double s = dy[static_cast<size_t>(r) * out + o];
      if (db) db[o] += s;
      const double* xr = x + static_cast<size_t>(r) * k;
      const __m256d bv = _mm256_set1_pd(s);
      for (int j = 0; j < kv; j += 4) {
        _mm256_storeu_pd(dwo + j, _mm256_fmadd_pd(bv, _mm256_loadu_pd(xr + j),
                                                  _mm256_loadu_pd(dwo + j)));
      }
      for (int j = kv; j < k; ++j) dwo[j] += s * xr[j];
    }
  }
}

void leaky_relu_fwd_avx2(const double* z, double* y, int n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sl = _mm256_set1_pd(slope);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d zv = _mm256_loadu_pd(z + i);
    const __m256d mask = _mm256_cmp_pd(zv, zero, _CMP_GE_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(_mm256_mul_pd(sl, zv), zv, mask));
  }
  for (; i < n; ++i) y[i] = z[i] >= 0.0 ? z[i] : slope * z[i];
}

void leaky_relu_bwd_avx2(const double* z, const double* dy, double* dz, int n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sl = _mm256_set1_pd(slope);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d zv = _mm256_loadu_pd(z + i);
    const __m256d dyv = _mm256_loadu_pd(dy + i);
    const __m256d mask = _mm256_cmp_pd(zv, zero, _CMP_GE_OQ);
    _mm256_storeu_pd(dz + i, _mm256_blendv_pd(_mm256_mul_pd(sl, dyv), dyv, mask));
  }
  for (; i < n; ++i) dz[i] = z[i] >= 0.0 ? dy[i] : slope * dy[i];
}

void adamw_update_avx2(double* w, const double* g, double* m, double* v, int n,
                       double lr, double beta1, double beta2, double eps,
                       double weight_decay, double inv_bias1, double inv_bias2) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d b2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d ib1 = _mm256_set1_pd(inv_bias1);
  const __m256d ib2 = _mm256_set1_pd(inv_bias2);
  const __m256d epsv = _mm256_set1_pd(eps);
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d decay = _mm256_set1_pd(1.0 - lr * weight_decay);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    mv = _mm256_fmadd_pd(b1, mv, _mm256_mul_pd(b1c, gv));
    vv = _mm256_fmadd_pd(b2, vv, _mm256_mul_pd(b2c, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_mul_pd(mv, ib1);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, ib2)), epsv);
    const __m256d wv = _mm256_loadu_pd(w + i);
    _mm256_storeu_pd(
        w + i, _mm256_sub_pd(_mm256_mul_pd(wv, decay),
                             _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom)));
  }
  const double dec = 1.0 - lr * weight_decay;
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    w[i] = w[i] * dec - lr * (m[i] * inv_bias1) / (std::sqrt(v[i] * inv_bias2) + eps);
  }
}

double reduce_sum_avx2(const double* x, int n) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double reduce_sumsq_shifted_avx2(const double* x, int n, double shift) {
  const __m256d sh = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), sh);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - shift;
    s += d * d;
  }
  return s;
}

}  // namespace

const Ops& avx2_ops_impl() {
  static const Ops ops{
      "avx2",
      gemm_nt_avx2,
      gemm_tn_acc_avx2,
      leaky_relu_fwd_avx2,
      leaky_relu_bwd_avx2,
      adamw_update_avx2,
      reduce_sum_avx2,
      reduce_sumsq_shifted_avx2,
  };
  return ops;
}

}  // namespace motsc::kernels::detail

#endif  // MOTSC_HAVE_AVX2
