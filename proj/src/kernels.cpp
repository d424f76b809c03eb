#include "rdvla/kernels.hpp"

#include <atomic>
#include <cmath>

namespace rdvla::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Work thresholds below which the dispatcher stays serial; forked regions on
// tiny tensors cost more than they save.
constexpr std::size_t kGemmGrain = 16384;   // m*k*n
constexpr std::size_t kRowGrain = 4096;     // rows*dim
constexpr std::size_t kElemGrain = 16384;   // n

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Row workers shared by the serial and OpenMP variants. noinline keeps one
// machine-code instance so both variants produce the same FP sequence per
// element.

__attribute__((noinline)) void gemm_nn_row(std::size_t i, std::size_t k, std::size_t n,
                                           const real_t* __restrict a,
                                           const real_t* __restrict b, real_t* __restrict c,
                                           bool acc) {
    real_t* crow = c + i * n;
    if (!acc) {
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0;
    }
    const real_t* arow = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
        const real_t av = arow[l];
        const real_t* brow = b + l * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

__attribute__((noinline)) void gemm_nt_row(std::size_t i, std::size_t k, std::size_t n,
                                           const real_t* __restrict a,
                                           const real_t* __restrict b, real_t* __restrict c,
                                           bool acc) {
    const real_t* arow = a + i * k;
    real_t* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const real_t* brow = b + j * k;
        real_t s = 0;
        for (std::size_t l = 0; l < k; ++l) s += arow[l] * brow[l];
        crow[j] = acc ? crow[j] + s : s;
    }
}

__attribute__((noinline)) void gemm_tn_row_impl(std::size_t i, std::size_t m, std::size_t k,
                                                std::size_t n, const real_t* __restrict a,
                                                const real_t* __restrict b,
                                                real_t* __restrict c, bool acc) {
    // A is [k x m], B is [k x n]; C[i, :] (+)= sum_l A[l, i] * B[l, :]
    real_t* crow = c + i * n;
    if (!acc) {
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0;
    }
    for (std::size_t l = 0; l < k; ++l) {
        const real_t av = a[l * m + i];
        const real_t* brow = b + l * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

__attribute__((noinline)) void add_chunk(std::size_t lo, std::size_t hi, const real_t* a,
                                         const real_t* b, real_t* out) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] + b[i];
}

__attribute__((noinline)) void mul_chunk(std::size_t lo, std::size_t hi, const real_t* a,
                                         const real_t* b, real_t* out) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] * b[i];
}

__attribute__((noinline)) void scale_chunk(std::size_t lo, std::size_t hi, const real_t* a,
                                           real_t c, real_t* out) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] * c;
}

__attribute__((noinline)) void axpy_chunk(std::size_t lo, std::size_t hi, real_t alpha,
                                          const real_t* x, real_t* y) {
    for (std::size_t i = lo; i < hi; ++i) y[i] += alpha * x[i];
}

__attribute__((noinline)) void gelu_fwd_chunk(std::size_t lo, std::size_t hi, const real_t* x,
                                              real_t* y) {
    for (std::size_t i = lo; i < hi; ++i) {
        const double v = static_cast<double>(x[i]);
        y[i] = static_cast<real_t>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
    }
}

__attribute__((noinline)) void gelu_bwd_chunk(std::size_t lo, std::size_t hi, const real_t* x,
                                              const real_t* dy, real_t* dx_acc) {
    for (std::size_t i = lo; i < hi; ++i) {
        const double v = static_cast<double>(x[i]);
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        dx_acc[i] += dy[i] * static_cast<real_t>(cdf + v * pdf);
    }
}

__attribute__((noinline)) void tanh_chunk(std::size_t lo, std::size_t hi, const real_t* x,
                                          real_t* y) {
    for (std::size_t i = lo; i < hi; ++i) y[i] = std::tanh(x[i]);
}

__attribute__((noinline)) void rmsnorm_fwd_row(std::size_t r, std::size_t dim, const real_t* x,
                                               const real_t* gain, real_t eps, real_t* y,
                                               real_t* inv_rms) {
    const real_t* xr = x + r * dim;
    real_t* yr = y + r * dim;
    real_t ms = 0;
    for (std::size_t j = 0; j < dim; ++j) ms += xr[j] * xr[j];
    ms = ms / static_cast<real_t>(dim) + eps;
    const real_t inv = static_cast<real_t>(1.0 / std::sqrt(static_cast<double>(ms)));
    inv_rms[r] = inv;
    for (std::size_t j = 0; j < dim; ++j) yr[j] = gain[j] * xr[j] * inv;
}

__attribute__((noinline)) void rmsnorm_bwd_row(std::size_t r, std::size_t dim, const real_t* x,
                                               const real_t* gain, const real_t* inv_rms,
                                               const real_t* dy, real_t* dx_acc) {
    // y_j = g_j * x_j * inv ; inv = (mean(x^2) + eps)^(-1/2)
    // dx_j = inv * (g_j dy_j - x_j * inv^2 / dim * sum_l(dy_l g_l x_l))
    const real_t* xr = x + r * dim;
    const real_t* dyr = dy + r * dim;
    real_t* dxr = dx_acc + r * dim;
    const real_t inv = inv_rms[r];
    real_t dot = 0;
    for (std::size_t j = 0; j < dim; ++j) dot += dyr[j] * gain[j] * xr[j];
    const real_t coef = dot * inv * inv * inv / static_cast<real_t>(dim);
    for (std::size_t j = 0; j < dim; ++j) dxr[j] += gain[j] * dyr[j] * inv - xr[j] * coef;
}

__attribute__((noinline)) void softmax_row(std::size_t r, std::size_t cols, const real_t* x,
                                           real_t* y) {
    const real_t* xr = x + r * cols;
    real_t* yr = y + r * cols;
    real_t mx = xr[0];
    for (std::size_t j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
    real_t z = 0;
    for (std::size_t j = 0; j < cols; ++j) {
        yr[j] = static_cast<real_t>(std::exp(static_cast<double>(xr[j] - mx)));
        z += yr[j];
    }
    const real_t invz = 1 / z;
    for (std::size_t j = 0; j < cols; ++j) yr[j] *= invz;
}

}  // namespace

void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }
bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

// ---- serial reference ----

namespace serial {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
    for (std::size_t i = 0; i < m; ++i) gemm_nn_row(i, k, n, a, b, c, acc);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
    for (std::size_t i = 0; i < m; ++i) gemm_nt_row(i, k, n, a, b, c, acc);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
    for (std::size_t i = 0; i < m; ++i) gemm_tn_row_impl(i, m, k, n, a, b, c, acc);
}

void add(std::size_t n, const real_t* a, const real_t* b, real_t* out) {
    add_chunk(0, n, a, b, out);
}
void mul(std::size_t n, const real_t* a, const real_t* b, real_t* out) {
    mul_chunk(0, n, a, b, out);
}
void scale(std::size_t n, const real_t* a, real_t c, real_t* out) {
    scale_chunk(0, n, a, c, out);
}
void axpy(std::size_t n, real_t alpha, const real_t* x, real_t* y) {
    axpy_chunk(0, n, alpha, x, y);
}
void gelu_fwd(std::size_t n, const real_t* x, real_t* y) { gelu_fwd_chunk(0, n, x, y); }
void gelu_bwd(std::size_t n, const real_t* x, const real_t* dy, real_t* dx_acc) {
    gelu_bwd_chunk(0, n, x, dy, dx_acc);
}
void tanh_fwd(std::size_t n, const real_t* x, real_t* y) { tanh_chunk(0, n, x, y); }

void rmsnorm_fwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 real_t eps, real_t* y, real_t* inv_rms) {
    for (std::size_t r = 0; r < rows; ++r) rmsnorm_fwd_row(r, dim, x, gain, eps, y, inv_rms);
}

void rmsnorm_bwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 const real_t* inv_rms, const real_t* dy, real_t* dx_acc, real_t* dgain_acc) {
    for (std::size_t r = 0; r < rows; ++r) rmsnorm_bwd_row(r, dim, x, gain, inv_rms, dy, dx_acc);
    if (dgain_acc) {
        for (std::size_t r = 0; r < rows; ++r) {
            const real_t* xr = x + r * dim;
            const real_t* dyr = dy + r * dim;
            const real_t inv = inv_rms[r];
            for (std::size_t j = 0; j < dim; ++j) dgain_acc[j] += dyr[j] * xr[j] * inv;
        }
    }
}

void softmax_rows(std::size_t rows, std::size_t cols, const real_t* x, real_t* y) {
    for (std::size_t r = 0; r < rows; ++r) softmax_row(r, cols, x, y);
}

void colsum(std::size_t rows, std::size_t cols, const real_t* x, real_t* out_acc) {
    for (std::size_t r = 0; r < rows; ++r) {
        const real_t* xr = x + r * cols;
        for (std::size_t j = 0; j < cols; ++j) out_acc[j] += xr[j];
    }
}

}  // namespace serial

// ---- OpenMP ----

namespace omp {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) gemm_nn_row(i, k, n, a, b, c, acc);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) gemm_nt_row(i, k, n, a, b, c, acc);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) gemm_tn_row_impl(i, m, k, n, a, b, c, acc);
}

void add(std::size_t n, const real_t* a, const real_t* b, real_t* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        add_chunk(i, i + 8192 < n ? i + 8192 : n, a, b, out);
    }
}

void mul(std::size_t n, const real_t* a, const real_t* b, real_t* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        mul_chunk(i, i + 8192 < n ? i + 8192 : n, a, b, out);
    }
}

void scale(std::size_t n, const real_t* a, real_t c, real_t* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        scale_chunk(i, i + 8192 < n ? i + 8192 : n, a, c, out);
    }
}

void axpy(std::size_t n, real_t alpha, const real_t* x, real_t* y) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        axpy_chunk(i, i + 8192 < n ? i + 8192 : n, alpha, x, y);
    }
}

void gelu_fwd(std::size_t n, const real_t* x, real_t* y) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        gelu_fwd_chunk(i, i + 8192 < n ? i + 8192 : n, x, y);
    }
}

void gelu_bwd(std::size_t n, const real_t* x, const real_t* dy, real_t* dx_acc) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        gelu_bwd_chunk(i, i + 8192 < n ? i + 8192 : n, x, dy, dx_acc);
    }
}

void tanh_fwd(std::size_t n, const real_t* x, real_t* y) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; i += 8192) {
        tanh_chunk(i, i + 8192 < n ? i + 8192 : n, x, y);
    }
}

void rmsnorm_fwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 real_t eps, real_t* y, real_t* inv_rms) {
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) rmsnorm_fwd_row(r, dim, x, gain, eps, y, inv_rms);
}

void rmsnorm_bwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 const real_t* inv_rms, const real_t* dy, real_t* dx_acc, real_t* dgain_acc) {
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) rmsnorm_bwd_row(r, dim, x, gain, inv_rms, dy, dx_acc);
    // dgain reduces across rows; keep it serial and ordered.
    if (dgain_acc) {
        for (std::size_t r = 0; r < rows; ++r) {
            const real_t* xr = x + r * dim;
            const real_t* dyr = dy + r * dim;
            const real_t inv = inv_rms[r];
            for (std::size_t j = 0; j < dim; ++j) dgain_acc[j] += dyr[j] * xr[j] * inv;
        }
    }
}

void softmax_rows(std::size_t rows, std::size_t cols, const real_t* x, real_t* y) {
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) softmax_row(r, cols, x, y);
}

void colsum(std::size_t rows, std::size_t cols, const real_t* x, real_t* out_acc) {
    // Column reduction over rows; serial keeps the accumulation order fixed.
    serial::colsum(rows, cols, x, out_acc);
}

}  // namespace omp

// ---- dispatch ----

namespace {
inline bool par(std::size_t work, std::size_t grain) {
    return parallel_enabled() && work >= grain;
}
}  // namespace

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
    if (par(m * k * n, kGemmGrain) && m > 1) {
        omp::gemm_nn(m, k, n, a, b, c, acc);
    } else {
        serial::gemm_nn(m, k, n, a, b, c, acc);
    }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
    if (par(m * k * n, kGemmGrain) && m > 1) {
        omp::gemm_nt(m, k, n, a, b, c, acc);
    } else {
        serial::gemm_nt(m, k, n, a, b, c, acc);
    }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const real_t* a, const real_t* b,
             real_t* c, bool acc) {
    if (par(m * k * n, kGemmGrain) && m > 1) {
        omp::gemm_tn(m, k, n, a, b, c, acc);
    } else {
        serial::gemm_tn(m, k, n, a, b, c, acc);
    }
}

void add(std::size_t n, const real_t* a, const real_t* b, real_t* out) {
    par(n, kElemGrain) ? omp::add(n, a, b, out) : serial::add(n, a, b, out);
}
void mul(std::size_t n, const real_t* a, const real_t* b, real_t* out) {
    par(n, kElemGrain) ? omp::mul(n, a, b, out) : serial::mul(n, a, b, out);
}
void scale(std::size_t n, const real_t* a, real_t c, real_t* out) {
    par(n, kElemGrain) ? omp::scale(n, a, c, out) : serial::scale(n, a, c, out);
}
void axpy(std::size_t n, real_t alpha, const real_t* x, real_t* y) {
    par(n, kElemGrain) ? omp::axpy(n, alpha, x, y) : serial::axpy(n, alpha, x, y);
}
void gelu_fwd(std::size_t n, const real_t* x, real_t* y) {
    par(n, kElemGrain) ? omp::gelu_fwd(n, x, y) : serial::gelu_fwd(n, x, y);
}
void gelu_bwd(std::size_t n, const real_t* x, const real_t* dy, real_t* dx_acc) {
    par(n, kElemGrain) ? omp::gelu_bwd(n, x, dy, dx_acc) : serial::gelu_bwd(n, x, dy, dx_acc);
}
void tanh_fwd(std::size_t n, const real_t* x, real_t* y) {
    par(n, kElemGrain) ? omp::tanh_fwd(n, x, y) : serial::tanh_fwd(n, x, y);
}
void rmsnorm_fwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 real_t eps, real_t* y, real_t* inv_rms) {
    if (par(rows * dim, kRowGrain) && rows > 1) {
        omp::rmsnorm_fwd(rows, dim, x, gain, eps, y, inv_rms);
    } else {
        serial::rmsnorm_fwd(rows, dim, x, gain, eps, y, inv_rms);
    }
}
void rmsnorm_bwd(std::size_t rows, std::size_t dim, const real_t* x, const real_t* gain,
                 const real_t* inv_rms, const real_t* dy, real_t* dx_acc, real_t* dgain_acc) {
    if (par(rows * dim, kRowGrain) && rows > 1) {
        omp::rmsnorm_bwd(rows, dim, x, gain, inv_rms, dy, dx_acc, dgain_acc);
    } else {
        serial::rmsnorm_bwd(rows, dim, x, gain, inv_rms, dy, dx_acc, dgain_acc);
    }
}
void softmax_rows(std::size_t rows, std::size_t cols, const real_t* x, real_t* y) {
    if (par(rows * cols, kRowGrain) && rows > 1) {
        omp::softmax_rows(rows, cols, x, y);
    } else {
        serial::softmax_rows(rows, cols, x, y);
    }
}
void colsum(std::size_t rows, std::size_t cols, const real_t* x, real_t* out_acc) {
    serial::colsum(rows, cols, x, out_acc);
}

real_t sum(std::size_t n, const real_t* x) {
    real_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

}  // namespace rdvla::kernels
