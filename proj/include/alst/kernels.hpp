#pragma once

#include <cstddef>
#include <cstdint>

namespace alst::kernels {

// Thread control for the parallel backend. 1 = always serial. The parallel
// kernels only ever split work across independent output elements and keep
// the serial per-element accumulation order, so results are bitwise identical
// for every thread count.
void set_threads(int n);
int threads();
bool openmp_compiled();

#define ALST_KERNEL_SET(DECL)                                                                     \
  /* c[m,n] (+)= a[m,k] * b[k,n] */                                                               \
  DECL void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,    \
                    std::size_t n, bool accumulate);                                              \
  /* c[m,n] (+)= a[m,k] * b[n,k]^T */                                                             \
  DECL void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,    \
                    std::size_t n, bool accumulate);                                              \
  /* c[m,n] (+)= a[k,m]^T * b[k,n] */                                                             \
  DECL void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,    \
                    std::size_t n, bool accumulate);                                              \
  DECL void add(const double* a, const double* b, double* out, std::size_t n);                    \
  DECL void sub(const double* a, const double* b, double* out, std::size_t n);                    \
  DECL void mul(const double* a, const double* b, double* out, std::size_t n);                    \
  DECL void axpy(double alpha, const double* x, double* y, std::size_t n); /* y += alpha*x */     \
  DECL void scale(const double* x, double alpha, double* out, std::size_t n);                     \
  DECL void add_rowvec(const double* a, const double* v, double* out, std::size_t m,              \
                       std::size_t n);                                                            \
  DECL void relu(const double* x, double* out, std::size_t n);                                    \
  DECL void relu_grad(const double* x, const double* g, double* dx, std::size_t n); /* dx += */   \
  DECL void softmax_rows(const double* x, double* out, std::size_t m, std::size_t n);             \
  /* keep[j] == 0 drops column j in every row; dropped outputs are exactly 0 */                   \
  DECL void masked_softmax_rows(const double* x, const std::uint8_t* keep, double* out,           \
                                std::size_t m, std::size_t n);                                    \
  DECL void softmax_rows_grad(const double* y, const double* g, double* dx, std::size_t m,        \
                              std::size_t n); /* dx += */                                         \
  DECL void layernorm_rows(const double* x, const double* gain, const double* bias, double eps,   \
                           double* out, double* xhat, double* inv_sigma, std::size_t m,           \
                           std::size_t n);                                                        \
  DECL void layernorm_rows_grad_x(const double* xhat, const double* inv_sigma,                    \
                                  const double* gain, const double* g, double* dx, std::size_t m, \
                                  std::size_t n); /* dx += */                                     \
  DECL void layernorm_rows_grad_gb(const double* xhat, const double* g, double* dgain,            \
                                   double* dbias, std::size_t m, std::size_t n); /* += */         \
  DECL void colsum(const double* a, double* out, std::size_t m, std::size_t n); /* out += */      \
  DECL void adam_update(double* w, const double* g, double* m1, double* m2, std::size_t n,        \
                        double lr, double beta1, double beta2, double eps, double bc1,            \
                        double bc2);

namespace serial {
ALST_KERNEL_SET()
}  // namespace serial

namespace par {
ALST_KERNEL_SET()
}  // namespace par

// Dispatching entry points: pick serial or parallel by work size and the
// configured thread count. Either path yields the same bits.
ALST_KERNEL_SET()

#undef ALST_KERNEL_SET

}  // namespace alst::kernels
