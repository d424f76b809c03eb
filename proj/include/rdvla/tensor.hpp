#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rdvla/common.hpp"
#include "rdvla/rng.hpp"

namespace rdvla {

class Graph;

// Process-wide accounting of live tensor elements (data + grad buffers).
// Lets tests assert the constant-memory property of the recurrent unroll.
struct AllocStats {
    static long long live_elems();
    static long long peak_elems();
    static void reset_peak();
};

struct TensorImpl {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<real_t> data;
    std::vector<real_t> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::weak_ptr<Graph> graph;

    TensorImpl(std::size_t r, std::size_t c);
    ~TensorImpl();
    TensorImpl(const TensorImpl&) = delete;
    TensorImpl& operator=(const TensorImpl&) = delete;
};

void ensure_grad(TensorImpl& t);

// Dense 2-D tensor handle. Scalars are [1x1], row vectors [1xn]. Data is
// immutable once an op has consumed it; gradients accumulate additively.
class Tensor {
  public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols);  // zeros

    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor full(std::size_t rows, std::size_t cols, real_t v);
    static Tensor scalar(real_t v);
    static Tensor from(std::size_t rows, std::size_t cols, std::vector<real_t> values);
    static Tensor randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev);

    bool defined() const { return impl_ != nullptr; }
    std::size_t rows() const { return impl_->rows; }
    std::size_t cols() const { return impl_->cols; }
    std::size_t numel() const { return impl_->data.size(); }

    const real_t* data() const { return impl_->data.data(); }
    real_t* data_mut() { return impl_->data.data(); }
    real_t at(std::size_t i, std::size_t j) const { return impl_->data[i * impl_->cols + j]; }
    void set(std::size_t i, std::size_t j, real_t v) { impl_->data[i * impl_->cols + j] = v; }
    void fill(real_t v);
    real_t item() const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    void set_requires_grad(bool on) { impl_->requires_grad = on; }
    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    const real_t* grad_data() const { return impl_->grad.data(); }
    real_t grad_at(std::size_t i, std::size_t j) const;
    void zero_grad();

    Tensor clone() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

  private:
    std::shared_ptr<TensorImpl> impl_;
};

// Recorded backward rules in forward order; reverse traversal is the
// backward pass. Rebuilt per forward pass (define-by-run).
class Graph {
  public:
    void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
    std::size_t size() const { return nodes_.size(); }
    // Runs every rule exactly once, newest first. Returns nodes visited.
    std::size_t run_backward();

  private:
    std::vector<std::function<void()>> nodes_;
};

// RAII scope that makes ops record onto a fresh graph (thread-local).
class GradTape {
  public:
    GradTape();
    ~GradTape();
    GradTape(const GradTape&) = delete;
    GradTape& operator=(const GradTape&) = delete;

    const std::shared_ptr<Graph>& graph() const { return graph_; }
    std::size_t size() const { return graph_->size(); }

  private:
    std::shared_ptr<Graph> graph_;
    std::shared_ptr<Graph> prev_;
};

// RAII scope that suspends recording; values computed inside are detached.
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    std::shared_ptr<Graph> prev_;
};

bool grad_recording() ;

// ---- differentiable ops ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& x, const Tensor& bias);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, real_t c);
// Multiply by a learnable scalar tensor [1x1].
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor tanh_map(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor rms_norm(const Tensor& x, const Tensor& gain, real_t eps);
// Multi-head scaled dot-product attention, bidirectional (no mask).
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
// Mean squared error over all entries.
Tensor mse(const Tensor& pred, const Tensor& target);
Tensor detach(const Tensor& x);

// Seeds d(loss)/d(loss) = 1 and runs the recorded graph backward. Returns
// the number of nodes visited. The tape that recorded the graph must still
// be alive.
std::size_t backward(const Tensor& loss);

bool all_finite(const Tensor& t);

}  // namespace rdvla
