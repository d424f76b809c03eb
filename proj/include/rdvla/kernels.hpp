#pragma once

#include <cstddef>

#include "rdvla/common.hpp"

namespace rdvla::kernels {

// Dense row-major kernels. Every kernel exists twice: a serial reference
// under kernels::serial and an OpenMP version under kernels::omp. Both call
// the same per-row workers, so results are bit-identical regardless of
// thread count; the only difference is who owns which rows. Global
// reductions (sum) stay serial in both for the same reason.
//
// The unprefixed entry points dispatch to the OpenMP versions when
// parallelism is enabled and the problem is large enough to pay for it.

void set_parallel(bool on);
bool parallel_enabled();

namespace serial {
// C (+)= A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
// C (+)= A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
// C[m x n] (+)= A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void add(std::size_t n, const real_t* a, const real_t* b, real_t* out);
void mul(std::size_t n, const real_t* a, const real_t* b, real_t* out);
void scale(std::size_t n, const real_t* a, real_t c, real_t* out);
void axpy(std::size_t n, real_t alpha, const real_t* x, real_t* y);
void gelu_fwd(std::size_t n, const real_t* x, real_t* y);
void gelu_bwd(std::size_t n, const real_t* x, const real_t* dy, real_t* dx_acc);
void tanh_fwd(std::size_t n, const real_t* x, real_t* y);
void rmsnorm_fwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 real_t eps, real_t* y, real_t* inv_rms);
void rmsnorm_bwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 const real_t* inv_rms, const real_t* dy, real_t* dx_acc, real_t* dgain_acc);
void softmax_rows(std::size_t rows, std::size_t cols, const real_t* x, real_t* y);
void colsum(std::size_t rows, std::size_t cols, const real_t* x, real_t* out_acc);
}  // namespace serial

namespace omp {
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void add(std::size_t n, const real_t* a, const real_t* b, real_t* out);
void mul(std::size_t n, const real_t* a, const real_t* b, real_t* out);
void scale(std::size_t n, const real_t* a, real_t c, real_t* out);
void axpy(std::size_t n, real_t alpha, const real_t* x, real_t* y);
void gelu_fwd(std::size_t n, const real_t* x, real_t* y);
void gelu_bwd(std::size_t n, const real_t* x, const real_t* dy, real_t* dx_acc);
void tanh_fwd(std::size_t n, const real_t* x, real_t* y);
void rmsnorm_fwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 real_t eps, real_t* y, real_t* inv_rms);
void rmsnorm_bwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 const real_t* inv_rms, const real_t* dy, real_t* dx_acc, real_t* dgain_acc);
void softmax_rows(std::size_t rows, std::size_t cols, const real_t* x, real_t* y);
void colsum(std::size_t rows, std::size_t cols, const real_t* x, real_t* out_acc);
}  // namespace omp

// Dispatching entry points.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc);
void add(std::size_t n, const real_t* a, const real_t* b, real_t* out);
void mul(std::size_t n, const real_t* a, const real_t* b, real_t* out);
void scale(std::size_t n, const real_t* a, real_t c, real_t* out);
void axpy(std::size_t n, real_t alpha, const real_t* x, real_t* y);
void gelu_fwd(std::size_t n, const real_t* x, real_t* y);
void gelu_bwd(std::size_t n, const real_t* x, const real_t* dy, real_t* dx_acc);
void tanh_fwd(std::size_t n, const real_t* x, real_t* y);
void rmsnorm_fwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 real_t eps, real_t* y, real_t* inv_rms);
void rmsnorm_bwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 const real_t* inv_rms, const real_t* dy, real_t* dx_acc, real_t* dgain_acc);
void softmax_rows(std::size_t rows, std::size_t cols, const real_t* x, real_t* y);
void colsum(std::size_t rows, std::size_t cols, const real_t* x, real_t* out_acc);

// Serial in both backends: summation order is part of the determinism
// contract.
real_t sum(std::size_t n, const real_t* x);

}  // namespace rdvla::kernels
