// OpenMP kernels. Work is split only across independent output rows/elements
// and each element keeps the serial accumulation order, so the results are
// bitwise identical to the serial backend for any thread count.

#include "alst/kernels.hpp"

#include "kernel_rows.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace alst::kernels::par {

using namespace alst::kernels::rows;

namespace {

// Contiguous range split used by the elementwise kernels.
template <class Fn>
void split_range(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel
  {
    const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t chunk = (n + nt - 1) / nt;
    const std::size_t i0 = std::min(n, t * chunk);
    const std::size_t i1 = std::min(n, i0 + chunk);
    if (i0 < i1) fn(i0, i1);
  }
#else
  fn(0, n);
#endif
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    gemm_nn_rows(a, b, c, k, n, static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1,
                 accumulate);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    gemm_nt_rows(a, b, c, k, n, static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1,
                 accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    gemm_tn_rows(a, b, c, k, m, n, static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1,
                 accumulate);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { add_range(a, b, out, i0, i1); });
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { sub_range(a, b, out, i0, i1); });
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { mul_range(a, b, out, i0, i1); });
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { axpy_range(alpha, x, y, i0, i1); });
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { scale_range(x, alpha, out, i0, i1); });
}

void add_rowvec(const double* a, const double* v, double* out, std::size_t m, std::size_t n) {
  split_range(m, [&](std::size_t i0, std::size_t i1) { add_rowvec_rows(a, v, out, n, i0, i1); });
}

void relu(const double* x, double* out, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { relu_range(x, out, i0, i1); });
}

void relu_grad(const double* x, const double* g, double* dx, std::size_t n) {
  split_range(n, [&](std::size_t i0, std::size_t i1) { relu_grad_range(x, g, dx, i0, i1); });
}

void softmax_rows(const double* x, double* out, std::size_t m, std::size_t n) {
  split_range(m, [&](std::size_t i0, std::size_t i1) { softmax_rows_range(x, out, n, i0, i1); });
}

void masked_softmax_rows(const double* x, const std::uint8_t* keep, double* out, std::size_t m,
                         std::size_t n) {
  split_range(m, [&](std::size_t i0, std::size_t i1) {
    masked_softmax_rows_range(x, keep, out, n, i0, i1);
  });
}

void softmax_rows_grad(const double* y, const double* g, double* dx, std::size_t m,
                       std::size_t n) {
  split_range(m, [&](std::size_t i0, std::size_t i1) {
    softmax_rows_grad_range(y, g, dx, n, i0, i1);
  });
}

void layernorm_rows(const double* x, const double* gain, const double* bias, double eps,
                    double* out, double* xhat, double* inv_sigma, std::size_t m, std::size_t n) {
  split_range(m, [&](std::size_t i0, std::size_t i1) {
    layernorm_rows_range(x, gain, bias, eps, out, xhat, inv_sigma, n, i0, i1);
  });
}

void layernorm_rows_grad_x(const double* xhat, const double* inv_sigma, const double* gain,
                           const double* g, double* dx, std::size_t m, std::size_t n) {
  split_range(m, [&](std::size_t i0, std::size_t i1) {
    layernorm_rows_grad_x_range(xhat, inv_sigma, gain, g, dx, n, i0, i1);
  });
}

void layernorm_rows_grad_gb(const double* xhat, const double* g, double* dgain, double* dbias,
                            std::size_t m, std::size_t n) {
  // Column-parallel: each column's sum over rows stays in ascending row order.
  split_range(n, [&](std::size_t j0, std::size_t j1) {
    layernorm_rows_grad_gb_cols(xhat, g, dgain, dbias, m, n, j0, j1);
  });
}

void colsum(const double* a, double* out, std::size_t m, std::size_t n) {
  split_range(n, [&](std::size_t j0, std::size_t j1) { colsum_cols(a, out, m, n, j0, j1); });
}

void adam_update(double* w, const double* g, double* m1, double* m2, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  split_range(n, [&](std::size_t i0, std::size_t i1) {
    adam_range(w, g, m1, m2, lr, beta1, beta2, eps, bc1, bc2, i0, i1);
  });
}

}  // namespace alst::kernels::par
