// Serial reference kernels. Kept as the ground truth the OpenMP backend is
// tested against.

#include "alst/kernels.hpp"

#include "kernel_rows.hpp"

namespace alst::kernels::serial {

using namespace alst::kernels::rows;

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  gemm_nn_rows(a, b, c, k, n, 0, m, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  gemm_nt_rows(a, b, c, k, n, 0, m, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  gemm_tn_rows(a, b, c, k, m, n, 0, m, accumulate);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  add_range(a, b, out, 0, n);
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  sub_range(a, b, out, 0, n);
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  mul_range(a, b, out, 0, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  axpy_range(alpha, x, y, 0, n);
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
  scale_range(x, alpha, out, 0, n);
}

void add_rowvec(const double* a, const double* v, double* out, std::size_t m, std::size_t n) {
  add_rowvec_rows(a, v, out, n, 0, m);
}

void relu(const double* x, double* out, std::size_t n) { relu_range(x, out, 0, n); }

void relu_grad(const double* x, const double* g, double* dx, std::size_t n) {
  relu_grad_range(x, g, dx, 0, n);
}

void softmax_rows(const double* x, double* out, std::size_t m, std::size_t n) {
  softmax_rows_range(x, out, n, 0, m);
}

void masked_softmax_rows(const double* x, const std::uint8_t* keep, double* out, std::size_t m,
                         std::size_t n) {
  masked_softmax_rows_range(x, keep, out, n, 0, m);
}

void softmax_rows_grad(const double* y, const double* g, double* dx, std::size_t m,
                       std::size_t n) {
  softmax_rows_grad_range(y, g, dx, n, 0, m);
}

void layernorm_rows(const double* x, const double* gain, const double* bias, double eps,
                    double* out, double* xhat, double* inv_sigma, std::size_t m, std::size_t n) {
  layernorm_rows_range(x, gain, bias, eps, out, xhat, inv_sigma, n, 0, m);
}

void layernorm_rows_grad_x(const double* xhat, const double* inv_sigma, const double* gain,
                           const double* g, double* dx, std::size_t m, std::size_t n) {
  layernorm_rows_grad_x_range(xhat, inv_sigma, gain, g, dx, n, 0, m);
}

void layernorm_rows_grad_gb(const double* xhat, const double* g, double* dgain, double* dbias,
                            std::size_t m, std::size_t n) {
  layernorm_rows_grad_gb_cols(xhat, g, dgain, dbias, m, n, 0, n);
}

void colsum(const double* a, double* out, std::size_t m, std::size_t n) {
  colsum_cols(a, out, m, n, 0, n);
}

void adam_update(double* w, const double* g, double* m1, double* m2, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  adam_range(w, g, m1, m2, lr, beta1, beta2, eps, bc1, bc2, 0, n);
}

}  // namespace alst::kernels::serial
