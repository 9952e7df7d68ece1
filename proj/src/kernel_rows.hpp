#pragma once

// Per-row / per-range worker bodies shared by the serial and OpenMP kernel
// backends. Both backends call exactly these functions over index ranges, so
// every output element sees the same floating-point operation order no matter
// how the ranges are split across threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace alst::kernels::rows {

inline void gemm_nn_rows(const double* a, const double* b, double* c, std::size_t k,
                         std::size_t n, std::size_t i0, std::size_t i1, bool accumulate) {
  for (std::size_t i = i0; i < i1; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline void gemm_nt_rows(const double* a, const double* b, double* c, std::size_t k,
                         std::size_t n, std::size_t i0, std::size_t i1, bool accumulate) {
  for (std::size_t i = i0; i < i1; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += arow[t] * brow[t];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

inline void gemm_tn_rows(const double* a, const double* b, double* c, std::size_t k,
                         std::size_t m, std::size_t n, std::size_t i0, std::size_t i1,
                         bool accumulate) {
  // c[i,:] += sum_kk a[kk,i] * b[kk,:]; a is [k,m], b is [k,n].
  for (std::size_t i = i0; i < i1; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[kk * m + i];
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline void add_range(const double* a, const double* b, double* out, std::size_t i0,
                      std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) out[i] = a[i] + b[i];
}

inline void sub_range(const double* a, const double* b, double* out, std::size_t i0,
                      std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) out[i] = a[i] - b[i];
}

inline void mul_range(const double* a, const double* b, double* out, std::size_t i0,
                      std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) out[i] = a[i] * b[i];
}

inline void axpy_range(double alpha, const double* x, double* y, std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) y[i] += alpha * x[i];
}

inline void scale_range(const double* x, double alpha, double* out, std::size_t i0,
                        std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) out[i] = alpha * x[i];
}

inline void add_rowvec_rows(const double* a, const double* v, double* out, std::size_t n,
                            std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) {
    const double* arow = a + i * n;
    double* orow = out + i * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] = arow[j] + v[j];
  }
}

inline void relu_range(const double* x, double* out, std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

inline void relu_grad_range(const double* x, const double* g, double* dx, std::size_t i0,
                            std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i)
    if (x[i] > 0.0) dx[i] += g[i];
}

inline void softmax_row(const double* x, double* out, std::size_t n) {
  double mx = x[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::exp(x[j] - mx);
    sum += out[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
}

inline void softmax_rows_range(const double* x, double* out, std::size_t n, std::size_t i0,
                               std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) softmax_row(x + i * n, out + i * n, n);
}

inline void masked_softmax_row(const double* x, const std::uint8_t* keep, double* out,
                               std::size_t n) {
  double mx = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (!keep[j]) continue;
    mx = any ? std::max(mx, x[j]) : x[j];
    any = true;
  }
  if (!any) {
    std::fill(out, out + n, 0.0);
    return;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (keep[j]) {
      out[j] = std::exp(x[j] - mx);
      sum += out[j];
    } else {
      out[j] = 0.0;
    }
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < n; ++j)
    if (keep[j]) out[j] *= inv;
}

inline void masked_softmax_rows_range(const double* x, const std::uint8_t* keep, double* out,
                                      std::size_t n, std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) masked_softmax_row(x + i * n, keep, out + i * n, n);
}

inline void softmax_rows_grad_range(const double* y, const double* g, double* dx, std::size_t n,
                                    std::size_t i0, std::size_t i1) {
  // dx_j += y_j * (g_j - sum_t g_t y_t). Masked outputs are 0, so they
  // contribute nothing and receive nothing.
  for (std::size_t i = i0; i < i1; ++i) {
    const double* yrow = y + i * n;
    const double* grow = g + i * n;
    double* drow = dx + i * n;
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += grow[j] * yrow[j];
    for (std::size_t j = 0; j < n; ++j) drow[j] += yrow[j] * (grow[j] - dot);
  }
}

inline void layernorm_rows_range(const double* x, const double* gain, const double* bias,
                                 double eps, double* out, double* xhat, double* inv_sigma,
                                 std::size_t n, std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) {
    const double* xrow = x + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xrow[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xrow[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = inv;
    double* xh = xhat + i * n;
    double* orow = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      xh[j] = (xrow[j] - mean) * inv;
      orow[j] = gain[j] * xh[j] + bias[j];
    }
  }
}

inline void layernorm_rows_grad_x_range(const double* xhat, const double* inv_sigma,
                                        const double* gain, const double* g, double* dx,
                                        std::size_t n, std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) {
    const double* xh = xhat + i * n;
    const double* grow = g + i * n;
    double* drow = dx + i * n;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dxh = grow[j] * gain[j];
      m1 += dxh;
      m2 += dxh * xh[j];
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    const double inv = inv_sigma[i];
    for (std::size_t j = 0; j < n; ++j)
      drow[j] += (grow[j] * gain[j] - m1 - xh[j] * m2) * inv;
  }
}

inline void layernorm_rows_grad_gb_cols(const double* xhat, const double* g, double* dgain,
                                        double* dbias, std::size_t m, std::size_t n,
                                        std::size_t j0, std::size_t j1) {
  for (std::size_t j = j0; j < j1; ++j) {
    double dg = 0.0, db = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      dg += g[i * n + j] * xhat[i * n + j];
      db += g[i * n + j];
    }
    dgain[j] += dg;
    dbias[j] += db;
  }
}

inline void colsum_cols(const double* a, double* out, std::size_t m, std::size_t n,
                        std::size_t j0, std::size_t j1) {
  for (std::size_t j = j0; j < j1; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a[i * n + j];
    out[j] += s;
  }
}

inline void adam_range(double* w, const double* g, double* m1, double* m2, double lr,
                       double beta1, double beta2, double eps, double bc1, double bc2,
                       std::size_t i0, std::size_t i1) {
  for (std::size_t i = i0; i < i1; ++i) {
    m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i];
    m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m1[i] / bc1;
    const double vhat = m2[i] / bc2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace alst::kernels::rows
