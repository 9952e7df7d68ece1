// Backend dispatch: route to the OpenMP kernels when the work is big enough
// to amortize the fork, otherwise stay serial. Both backends give the same
// bits, so the threshold only affects speed.

#include "alst/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace alst::kernels {

namespace {
int g_threads = 1;

constexpr std::size_t kMinGemmWork = 1 << 15;   // m*k*n
constexpr std::size_t kMinElemWork = 1 << 16;   // elements
constexpr std::size_t kMinRowWork = 1 << 14;    // m*n

bool par_ok(std::size_t work, std::size_t min_work) { return g_threads > 1 && work >= min_work; }
}  // namespace

void set_threads(int n) {
  g_threads = std::max(1, n);
#ifdef _OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int threads() { return g_threads; }

bool openmp_compiled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  if (par_ok(m * k * n, kMinGemmWork))
    par::gemm_nn(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_nn(a, b, c, m, k, n, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  if (par_ok(m * k * n, kMinGemmWork))
    par::gemm_nt(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_nt(a, b, c, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  if (par_ok(m * k * n, kMinGemmWork))
    par::gemm_tn(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_tn(a, b, c, m, k, n, accumulate);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::add(a, b, out, n);
  else
    serial::add(a, b, out, n);
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::sub(a, b, out, n);
  else
    serial::sub(a, b, out, n);
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::mul(a, b, out, n);
  else
    serial::mul(a, b, out, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::axpy(alpha, x, y, n);
  else
    serial::axpy(alpha, x, y, n);
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::scale(x, alpha, out, n);
  else
    serial::scale(x, alpha, out, n);
}

void add_rowvec(const double* a, const double* v, double* out, std::size_t m, std::size_t n) {
  if (par_ok(m * n, kMinElemWork))
    par::add_rowvec(a, v, out, m, n);
  else
    serial::add_rowvec(a, v, out, m, n);
}

void relu(const double* x, double* out, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::relu(x, out, n);
  else
    serial::relu(x, out, n);
}

void relu_grad(const double* x, const double* g, double* dx, std::size_t n) {
  if (par_ok(n, kMinElemWork))
    par::relu_grad(x, g, dx, n);
  else
    serial::relu_grad(x, g, dx, n);
}

void softmax_rows(const double* x, double* out, std::size_t m, std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::softmax_rows(x, out, m, n);
  else
    serial::softmax_rows(x, out, m, n);
}

void masked_softmax_rows(const double* x, const std::uint8_t* keep, double* out, std::size_t m,
                         std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::masked_softmax_rows(x, keep, out, m, n);
  else
    serial::masked_softmax_rows(x, keep, out, m, n);
}

void softmax_rows_grad(const double* y, const double* g, double* dx, std::size_t m,
                       std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::softmax_rows_grad(y, g, dx, m, n);
  else
    serial::softmax_rows_grad(y, g, dx, m, n);
}

void layernorm_rows(const double* x, const double* gain, const double* bias, double eps,
                    double* out, double* xhat, double* inv_sigma, std::size_t m, std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::layernorm_rows(x, gain, bias, eps, out, xhat, inv_sigma, m, n);
  else
    serial::layernorm_rows(x, gain, bias, eps, out, xhat, inv_sigma, m, n);
}

void layernorm_rows_grad_x(const double* xhat, const double* inv_sigma, const double* gain,
                           const double* g, double* dx, std::size_t m, std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::layernorm_rows_grad_x(xhat, inv_sigma, gain, g, dx, m, n);
  else
    serial::layernorm_rows_grad_x(xhat, inv_sigma, gain, g, dx, m, n);
}

void layernorm_rows_grad_gb(const double* xhat, const double* g, double* dgain, double* dbias,
                            std::size_t m, std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::layernorm_rows_grad_gb(xhat, g, dgain, dbias, m, n);
  else
    serial::layernorm_rows_grad_gb(xhat, g, dgain, dbias, m, n);
}

void colsum(const double* a, double* out, std::size_t m, std::size_t n) {
  if (par_ok(m * n, kMinRowWork))
    par::colsum(a, out, m, n);
  else
    serial::colsum(a, out, m, n);
}

void adam_update(double* w, const double* g, double* m1, double* m2, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  if (par_ok(n, kMinElemWork))
    par::adam_update(w, g, m1, m2, n, lr, beta1, beta2, eps, bc1, bc2);
  else
    serial::adam_update(w, g, m1, m2, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace alst::kernels
