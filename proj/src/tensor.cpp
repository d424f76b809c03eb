#include "rdvla/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

#include "rdvla/kernels.hpp"

namespace rdvla {

namespace {

std::atomic<long long> g_live{0};
std::atomic<long long> g_peak{0};

void count_alloc(long long n) {
    const long long now = g_live.fetch_add(n) + n;
    long long peak = g_peak.load();
    while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
    }
}

thread_local std::shared_ptr<Graph> t_active;

inline bool taping() { return static_cast<bool>(t_active); }

void mark_output(const Tensor& out) {
    out.impl()->requires_grad = true;
    out.impl()->graph = t_active;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         shape_str(a.rows(), a.cols()) + " vs " + shape_str(b.rows(), b.cols()));
    }
}

}  // namespace

long long AllocStats::live_elems() { return g_live.load(); }
long long AllocStats::peak_elems() { return g_peak.load(); }
void AllocStats::reset_peak() { g_peak.store(g_live.load()); }

TensorImpl::TensorImpl(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, real_t(0)) {
    count_alloc(static_cast<long long>(data.size()));
}

TensorImpl::~TensorImpl() {
    g_live.fetch_sub(static_cast<long long>(data.size() + grad.size()));
}

void ensure_grad(TensorImpl& t) {
    if (t.grad.empty()) {
        t.grad.assign(t.data.size(), real_t(0));
        count_alloc(static_cast<long long>(t.grad.size()));
    }
}

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : impl_(std::make_shared<TensorImpl>(rows, cols)) {}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

Tensor Tensor::full(std::size_t rows, std::size_t cols, real_t v) {
    Tensor t(rows, cols);
    for (auto& x : t.impl_->data) x = v;
    return t;
}

Tensor Tensor::scalar(real_t v) { return full(1, 1, v); }

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<real_t> values) {
    if (values.size() != rows * cols) {
        throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(rows, cols));
    }
    Tensor t(rows, cols);
    t.impl_->data = std::move(values);
    return t;
}

Tensor Tensor::randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev) {
    Tensor t(rows, cols);
    for (auto& x : t.impl_->data) x = static_cast<real_t>(rng.normal(0.0, stddev));
    return t;
}

void Tensor::fill(real_t v) {
    for (auto& x : impl_->data) x = v;
}

real_t Tensor::item() const {
    if (numel() != 1) {
        throw UsageError("item: tensor is not scalar, shape " + shape_str(rows(), cols()));
    }
    return impl_->data[0];
}

real_t Tensor::grad_at(std::size_t i, std::size_t j) const {
    if (impl_->grad.empty()) return real_t(0);
    return impl_->grad[i * impl_->cols + j];
}

void Tensor::zero_grad() {
    for (auto& g : impl_->grad) g = real_t(0);
}

Tensor Tensor::clone() const {
    Tensor t(rows(), cols());
    t.impl_->data = impl_->data;
    return t;
}

std::size_t Graph::run_backward() {
    std::size_t visited = 0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        (*it)();
        ++visited;
    }
    return visited;
}

GradTape::GradTape() : graph_(std::make_shared<Graph>()), prev_(t_active) {
    t_active = graph_;
}

GradTape::~GradTape() { t_active = prev_; }

NoGradGuard::NoGradGuard() : prev_(t_active) { t_active.reset(); }

NoGradGuard::~NoGradGuard() { t_active = prev_; }

bool grad_recording() { return taping(); }

std::size_t backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw UsageError("backward: loss must be scalar, got shape " +
                         shape_str(loss.rows(), loss.cols()));
    }
    auto g = loss.impl()->graph.lock();
    if (!g) throw UsageError("backward: loss has no live recorded graph");
    ensure_grad(*loss.impl());
    loss.impl()->grad[0] = real_t(1);
    return g->run_backward();
}

bool all_finite(const Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
        if (!is_finite(t.data()[i])) return false;
    }
    return true;
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.rows(), a.cols()) +
                         " vs " + shape_str(b.rows(), b.cols()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c(m, n);
    kernels::gemm_nn(m, k, n, a.data(), b.data(), c.data_mut(), false);
    if (taping() && (a.requires_grad() || b.requires_grad())) {
        mark_output(c);
        auto ai = a.impl(), bi = b.impl(), ci = c.impl();
        t_active->record([ai, bi, ci, m, k, n] {
            if (ci->grad.empty()) return;
            const real_t* dc = ci->grad.data();
            if (ai->requires_grad) {
                ensure_grad(*ai);
                kernels::gemm_nt(m, n, k, dc, bi->data.data(), ai->grad.data(), true);
            }
            if (bi->requires_grad) {
                ensure_grad(*bi);
                kernels::gemm_tn(k, m, n, ai->data.data(), dc, bi->grad.data(), true);
            }
        });
    }
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor c(a.rows(), a.cols());
    kernels::add(a.numel(), a.data(), b.data(), c.data_mut());
    if (taping() && (a.requires_grad() || b.requires_grad())) {
        mark_output(c);
        auto ai = a.impl(), bi = b.impl(), ci = c.impl();
        t_active->record([ai, bi, ci] {
            if (ci->grad.empty()) return;
            const std::size_t n = ci->grad.size();
            if (ai->requires_grad) {
                ensure_grad(*ai);
                kernels::axpy(n, real_t(1), ci->grad.data(), ai->grad.data());
            }
            if (bi->requires_grad) {
                ensure_grad(*bi);
                kernels::axpy(n, real_t(1), ci->grad.data(), bi->grad.data());
            }
        });
    }
    return c;
}

Tensor add_rowvec(const Tensor& x, const Tensor& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols()) {
        throw ShapeError("add_rowvec: bias " + shape_str(bias.rows(), bias.cols()) +
                         " does not broadcast over " + shape_str(x.rows(), x.cols()));
    }
    Tensor c(x.rows(), x.cols());
    const std::size_t rows = x.rows(), cols = x.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        kernels::add(cols, x.data() + r * cols, bias.data(), c.data_mut() + r * cols);
    }
    if (taping() && (x.requires_grad() || bias.requires_grad())) {
        mark_output(c);
        auto xi = x.impl(), bi = bias.impl(), ci = c.impl();
        t_active->record([xi, bi, ci, rows, cols] {
            if (ci->grad.empty()) return;
            if (xi->requires_grad) {
                ensure_grad(*xi);
                kernels::axpy(rows * cols, real_t(1), ci->grad.data(), xi->grad.data());
            }
            if (bi->requires_grad) {
                ensure_grad(*bi);
                kernels::colsum(rows, cols, ci->grad.data(), bi->grad.data());
            }
        });
    }
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor c(a.rows(), a.cols());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) c.data_mut()[i] = a.data()[i] - b.data()[i];
    if (taping() && (a.requires_grad() || b.requires_grad())) {
        mark_output(c);
        auto ai = a.impl(), bi = b.impl(), ci = c.impl();
        t_active->record([ai, bi, ci, n] {
            if (ci->grad.empty()) return;
            if (ai->requires_grad) {
                ensure_grad(*ai);
                kernels::axpy(n, real_t(1), ci->grad.data(), ai->grad.data());
            }
            if (bi->requires_grad) {
                ensure_grad(*bi);
                kernels::axpy(n, real_t(-1), ci->grad.data(), bi->grad.data());
            }
        });
    }
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor c(a.rows(), a.cols());
    kernels::mul(a.numel(), a.data(), b.data(), c.data_mut());
    if (taping() && (a.requires_grad() || b.requires_grad())) {
        mark_output(c);
        auto ai = a.impl(), bi = b.impl(), ci = c.impl();
        t_active->record([ai, bi, ci] {
            if (ci->grad.empty()) return;
            const std::size_t n = ci->grad.size();
            const real_t* dc = ci->grad.data();
            if (ai->requires_grad) {
                ensure_grad(*ai);
                for (std::size_t i = 0; i < n; ++i) ai->grad[i] += dc[i] * bi->data[i];
            }
            if (bi->requires_grad) {
                ensure_grad(*bi);
                for (std::size_t i = 0; i < n; ++i) bi->grad[i] += dc[i] * ai->data[i];
            }
        });
    }
    return c;
}

Tensor scale(const Tensor& a, real_t c) {
    Tensor out(a.rows(), a.cols());
    kernels::scale(a.numel(), a.data(), c, out.data_mut());
    if (taping() && a.requires_grad()) {
        mark_output(out);
        auto ai = a.impl(), oi = out.impl();
        t_active->record([ai, oi, c] {
            if (oi->grad.empty()) return;
            ensure_grad(*ai);
            kernels::axpy(oi->grad.size(), c, oi->grad.data(), ai->grad.data());
        });
    }
    return out;
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) {
        throw ShapeError("scale_by: scale must be [1x1], got " + shape_str(s.rows(), s.cols()));
    }
    const real_t sv = s.data()[0];
    Tensor out(a.rows(), a.cols());
    kernels::scale(a.numel(), a.data(), sv, out.data_mut());
    if (taping() && (a.requires_grad() || s.requires_grad())) {
        mark_output(out);
        auto ai = a.impl(), si = s.impl(), oi = out.impl();
        t_active->record([ai, si, oi, sv] {
            if (oi->grad.empty()) return;
            const std::size_t n = oi->grad.size();
            if (ai->requires_grad) {
                ensure_grad(*ai);
                kernels::axpy(n, sv, oi->grad.data(), ai->grad.data());
            }
            if (si->requires_grad) {
                ensure_grad(*si);
                real_t dot = 0;
                for (std::size_t i = 0; i < n; ++i) dot += oi->grad[i] * ai->data[i];
                si->grad[0] += dot;
            }
        });
    }
    return out;
}

Tensor tanh_map(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    kernels::tanh_fwd(a.numel(), a.data(), out.data_mut());
    if (taping() && a.requires_grad()) {
        mark_output(out);
        auto ai = a.impl(), oi = out.impl();
        t_active->record([ai, oi] {
            if (oi->grad.empty()) return;
            ensure_grad(*ai);
            const std::size_t n = oi->grad.size();
            for (std::size_t i = 0; i < n; ++i) {
                const real_t y = oi->data[i];
                ai->grad[i] += oi->grad[i] * (real_t(1) - y * y);
            }
        });
    }
    return out;
}

Tensor gelu(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    kernels::gelu_fwd(a.numel(), a.data(), out.data_mut());
    if (taping() && a.requires_grad()) {
        mark_output(out);
        auto ai = a.impl(), oi = out.impl();
        t_active->record([ai, oi] {
            if (oi->grad.empty()) return;
            ensure_grad(*ai);
            kernels::gelu_bwd(oi->grad.size(), ai->data.data(), oi->grad.data(),
                              ai->grad.data());
        });
    }
    return out;
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, real_t eps) {
    if (eps <= real_t(0)) throw ConfigError("rms_norm: eps must be positive");
    if (gain.rows() != 1 || gain.cols() != x.cols()) {
        throw ShapeError("rms_norm: gain " + shape_str(gain.rows(), gain.cols()) +
                         " does not match feature width of " + shape_str(x.rows(), x.cols()));
    }
    const std::size_t rows = x.rows(), dim = x.cols();
    Tensor y(rows, dim);
    auto inv_rms = std::make_shared<std::vector<real_t>>(rows);
    kernels::rmsnorm_fwd(rows, dim, x.data(), gain.data(), eps, y.data_mut(), inv_rms->data());
    if (taping() && (x.requires_grad() || gain.requires_grad())) {
        mark_output(y);
        auto xi = x.impl(), gi = gain.impl(), yi = y.impl();
        t_active->record([xi, gi, yi, inv_rms, rows, dim] {
            if (yi->grad.empty()) return;
            real_t* dx = nullptr;
            real_t* dgain = nullptr;
            if (xi->requires_grad) {
                ensure_grad(*xi);
                dx = xi->grad.data();
            }
            if (gi->requires_grad) {
                ensure_grad(*gi);
                dgain = gi->grad.data();
            }
            if (dx) {
                kernels::rmsnorm_bwd(rows, dim, xi->data.data(), gi->data.data(),
                                     inv_rms->data(), yi->grad.data(), dx, dgain);
            } else if (dgain) {
                for (std::size_t r = 0; r < rows; ++r) {
                    const real_t* xr = xi->data.data() + r * dim;
                    const real_t* dyr = yi->grad.data() + r * dim;
                    const real_t inv = (*inv_rms)[r];
                    for (std::size_t j = 0; j < dim; ++j) dgain[j] += dyr[j] * xr[j] * inv;
                }
            }
        });
    }
    return y;
}

namespace {

void pack_cols(const real_t* src, std::size_t rows, std::size_t width, std::size_t c0,
               std::size_t dh, real_t* dst) {
    for (std::size_t r = 0; r < rows; ++r) {
        std::memcpy(dst + r * dh, src + r * width + c0, dh * sizeof(real_t));
    }
}

void scatter_cols_acc(const real_t* src, std::size_t rows, std::size_t width, std::size_t c0,
                      std::size_t dh, real_t* dst) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < dh; ++j) dst[r * width + c0 + j] += src[r * dh + j];
    }
}

}  // namespace

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
    const std::size_t d = q.cols();
    if (heads == 0 || d % heads != 0) {
        throw ConfigError("attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
    if (k.cols() != d || v.cols() != d) {
        throw ShapeError("attention: q/k/v widths disagree: " + shape_str(q.rows(), q.cols()) +
                         ", " + shape_str(k.rows(), k.cols()) + ", " +
                         shape_str(v.rows(), v.cols()));
    }
    if (k.rows() != v.rows()) {
        throw ShapeError("attention: k rows " + shape_str(k.rows(), k.cols()) +
                         " vs v rows " + shape_str(v.rows(), v.cols()));
    }
    const std::size_t lq = q.rows(), lk = k.rows(), dh = d / heads;
    const real_t att_scale = static_cast<real_t>(1.0 / std::sqrt(static_cast<double>(dh)));

    Tensor out(lq, d);
    // Per-head softmax probabilities saved for the backward rule.
    auto probs = std::make_shared<std::vector<real_t>>(heads * lq * lk);
    std::vector<real_t> qh(lq * dh), kh(lk * dh), vh(lk * dh), scores(lq * lk), oh(lq * dh);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        pack_cols(q.data(), lq, d, c0, dh, qh.data());
        pack_cols(k.data(), lk, d, c0, dh, kh.data());
        pack_cols(v.data(), lk, d, c0, dh, vh.data());
        kernels::gemm_nt(lq, dh, lk, qh.data(), kh.data(), scores.data(), false);
        kernels::scale(lq * lk, scores.data(), att_scale, scores.data());
        real_t* p = probs->data() + h * lq * lk;
        kernels::softmax_rows(lq, lk, scores.data(), p);
        kernels::gemm_nn(lq, lk, dh, p, vh.data(), oh.data(), false);
        for (std::size_t r = 0; r < lq; ++r) {
            std::memcpy(out.data_mut() + r * d + c0, oh.data() + r * dh, dh * sizeof(real_t));
        }
    }

    if (taping() && (q.requires_grad() || k.requires_grad() || v.requires_grad())) {
        mark_output(out);
        auto qi = q.impl(), ki = k.impl(), vi = v.impl(), oi = out.impl();
        t_active->record([qi, ki, vi, oi, probs, heads, lq, lk, d, dh, att_scale] {
            if (oi->grad.empty()) return;
            std::vector<real_t> qh(lq * dh), kh(lk * dh), vh(lk * dh);
            std::vector<real_t> doh(lq * dh), dp(lq * lk), ds(lq * lk);
            std::vector<real_t> dqh(lq * dh), dkh(lk * dh), dvh(lk * dh);
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t c0 = h * dh;
                pack_cols(qi->data.data(), lq, d, c0, dh, qh.data());
                pack_cols(ki->data.data(), lk, d, c0, dh, kh.data());
                pack_cols(vi->data.data(), lk, d, c0, dh, vh.data());
                pack_cols(oi->grad.data(), lq, d, c0, dh, doh.data());
                const real_t* p = probs->data() + h * lq * lk;
                // dV = P^T dO ; dP = dO V^T ; dS = P .* (dP - rowsum(dP .* P))
                kernels::gemm_tn(lk, lq, dh, p, doh.data(), dvh.data(), false);
                kernels::gemm_nt(lq, dh, lk, doh.data(), vh.data(), dp.data(), false);
                for (std::size_t r = 0; r < lq; ++r) {
                    const real_t* pr = p + r * lk;
                    const real_t* dpr = dp.data() + r * lk;
                    real_t dot = 0;
                    for (std::size_t j = 0; j < lk; ++j) dot += dpr[j] * pr[j];
                    real_t* dsr = ds.data() + r * lk;
                    for (std::size_t j = 0; j < lk; ++j) dsr[j] = pr[j] * (dpr[j] - dot);
                }
                kernels::scale(lq * lk, ds.data(), att_scale, ds.data());
                kernels::gemm_nn(lq, lk, dh, ds.data(), kh.data(), dqh.data(), false);
                kernels::gemm_tn(lk, lq, dh, ds.data(), qh.data(), dkh.data(), false);
                if (qi->requires_grad) {
                    ensure_grad(*qi);
                    scatter_cols_acc(dqh.data(), lq, d, c0, dh, qi->grad.data());
                }
                if (ki->requires_grad) {
                    ensure_grad(*ki);
                    scatter_cols_acc(dkh.data(), lk, d, c0, dh, ki->grad.data());
                }
                if (vi->requires_grad) {
                    ensure_grad(*vi);
                    scatter_cols_acc(dvh.data(), lk, d, c0, dh, vi->grad.data());
                }
            }
        });
    }
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("concat_cols: row counts disagree: " + shape_str(a.rows(), a.cols()) +
                         " vs " + shape_str(b.rows(), b.cols()));
    }
    const std::size_t rows = a.rows(), ca = a.cols(), cb = b.cols();
    Tensor c(rows, ca + cb);
    for (std::size_t r = 0; r < rows; ++r) {
        std::memcpy(c.data_mut() + r * (ca + cb), a.data() + r * ca, ca * sizeof(real_t));
        std::memcpy(c.data_mut() + r * (ca + cb) + ca, b.data() + r * cb, cb * sizeof(real_t));
    }
    if (taping() && (a.requires_grad() || b.requires_grad())) {
        mark_output(c);
        auto ai = a.impl(), bi = b.impl(), ci = c.impl();
        t_active->record([ai, bi, ci, rows, ca, cb] {
            if (ci->grad.empty()) return;
            const real_t* dc = ci->grad.data();
            if (ai->requires_grad) {
                ensure_grad(*ai);
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < ca; ++j) {
                        ai->grad[r * ca + j] += dc[r * (ca + cb) + j];
                    }
                }
            }
            if (bi->requires_grad) {
                ensure_grad(*bi);
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < cb; ++j) {
                        bi->grad[r * cb + j] += dc[r * (ca + cb) + ca + j];
                    }
                }
            }
        });
    }
    return c;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw UsageError("concat_rows: no parts");
    const std::size_t cols = parts[0].cols();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) {
            throw ShapeError("concat_rows: column widths disagree: " +
                             shape_str(parts[0].rows(), cols) + " vs " +
                             shape_str(p.rows(), p.cols()));
        }
        rows += p.rows();
    }
    Tensor c(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::memcpy(c.data_mut() + off * cols, p.data(), p.numel() * sizeof(real_t));
        off += p.rows();
    }
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (taping() && any) {
        mark_output(c);
        std::vector<std::shared_ptr<TensorImpl>> impls;
        impls.reserve(parts.size());
        for (const auto& p : parts) impls.push_back(p.impl());
        auto ci = c.impl();
        t_active->record([impls, ci, cols] {
            if (ci->grad.empty()) return;
            std::size_t off = 0;
            for (const auto& pi : impls) {
                if (pi->requires_grad) {
                    ensure_grad(*pi);
                    kernels::axpy(pi->data.size(), real_t(1), ci->grad.data() + off * cols,
                                  pi->grad.data());
                }
                off += pi->rows;
            }
        });
    }
    return c;
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
    if (r0 >= r1 || r1 > x.rows()) {
        throw ShapeError("slice_rows: [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") out of range for " + shape_str(x.rows(), x.cols()));
    }
    const std::size_t cols = x.cols(), rows = r1 - r0;
    Tensor y(rows, cols);
    std::memcpy(y.data_mut(), x.data() + r0 * cols, rows * cols * sizeof(real_t));
    if (taping() && x.requires_grad()) {
        mark_output(y);
        auto xi = x.impl(), yi = y.impl();
        t_active->record([xi, yi, r0, rows, cols] {
            if (yi->grad.empty()) return;
            ensure_grad(*xi);
            kernels::axpy(rows * cols, real_t(1), yi->grad.data(), xi->grad.data() + r0 * cols);
        });
    }
    return y;
}

Tensor sum_all(const Tensor& x) {
    Tensor s = Tensor::scalar(kernels::sum(x.numel(), x.data()));
    if (taping() && x.requires_grad()) {
        mark_output(s);
        auto xi = x.impl(), si = s.impl();
        t_active->record([xi, si] {
            if (si->grad.empty()) return;
            ensure_grad(*xi);
            const real_t g = si->grad[0];
            for (auto& v : xi->grad) v += g;
        });
    }
    return s;
}

Tensor mean_all(const Tensor& x) {
    const real_t inv = real_t(1) / static_cast<real_t>(x.numel());
    Tensor s = Tensor::scalar(kernels::sum(x.numel(), x.data()) * inv);
    if (taping() && x.requires_grad()) {
        mark_output(s);
        auto xi = x.impl(), si = s.impl();
        t_active->record([xi, si, inv] {
            if (si->grad.empty()) return;
            ensure_grad(*xi);
            const real_t g = si->grad[0] * inv;
            for (auto& v : xi->grad) v += g;
        });
    }
    return s;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
    check_same_shape("mse", pred, target);
    const std::size_t n = pred.numel();
    real_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const real_t d = pred.data()[i] - target.data()[i];
        acc += d * d;
    }
    Tensor s = Tensor::scalar(acc / static_cast<real_t>(n));
    if (taping() && (pred.requires_grad() || target.requires_grad())) {
        mark_output(s);
        auto pi = pred.impl(), ti = target.impl(), si = s.impl();
        t_active->record([pi, ti, si, n] {
            if (si->grad.empty()) return;
            const real_t g = si->grad[0] * real_t(2) / static_cast<real_t>(n);
            if (pi->requires_grad) {
                ensure_grad(*pi);
                for (std::size_t i = 0; i < n; ++i) {
                    pi->grad[i] += g * (pi->data[i] - ti->data[i]);
                }
            }
            if (ti->requires_grad) {
                ensure_grad(*ti);
                for (std::size_t i = 0; i < n; ++i) {
                    ti->grad[i] -= g * (pi->data[i] - ti->data[i]);
                }
            }
        });
    }
    return s;
}

Tensor detach(const Tensor& x) {
    Tensor y(x.rows(), x.cols());
    y.impl()->data = x.impl()->data;
    return y;
}

}  // namespace rdvla
