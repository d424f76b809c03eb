#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rdvla/tensor.hpp"

namespace rdvla {

// Ordered, named registry of trainable tensors. Order is the serialization
// and optimizer-state order, so construction order must stay stable.
class ParamSet {
  public:
    Tensor add(const std::string& name, Tensor t);
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::vector<std::pair<std::string, Tensor>>& items_mut() { return items_; }
    Tensor* find(const std::string& name);
    std::size_t total_elems() const;
    void zero_grads();

  private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

struct LinearLayer {
    Tensor w;  // [in x out], applied as x * w
    Tensor b;  // [1 x out]

    LinearLayer() = default;
    LinearLayer(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out,
                Rng& rng, double w_std);
    Tensor operator()(const Tensor& x) const { return add_rowvec(matmul(x, w), b); }
};

struct RmsNormLayer {
    Tensor gain;  // [1 x dim]
    real_t eps = real_t(1e-6);

    RmsNormLayer() = default;
    RmsNormLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, real_t eps);
    Tensor operator()(const Tensor& x) const { return rms_norm(x, gain, eps); }
};

struct AttentionLayer {
    LinearLayer wq, wk, wv, wo;
    std::size_t heads = 1;

    AttentionLayer() = default;
    AttentionLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
                   Rng& rng);
    Tensor operator()(const Tensor& q_in, const Tensor& kv_in) const;
};

struct MlpLayer {
    LinearLayer fc1, fc2;

    MlpLayer() = default;
    MlpLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t hidden,
             Rng& rng);
    Tensor operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }
};

// Pre-norm self-attention + MLP block with residual connections.
struct SelfBlock {
    RmsNormLayer n1, n2;
    AttentionLayer attn;
    MlpLayer mlp;

    SelfBlock() = default;
    SelfBlock(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
              std::size_t mlp_hidden, real_t eps, Rng& rng);
    Tensor operator()(const Tensor& x) const;
};

// Pre-norm block: bidirectional self-attention over the input rows, then
// cross-attention to a conditioning matrix scaled by tanh(gate) (identity at
// init since gate starts at 0), then MLP. Shared by prelude, core and coda.
struct CrossBlock {
    RmsNormLayer n1, n2, n3;
    AttentionLayer self_attn, cross_attn;
    Tensor gate;  // [1x1]
    MlpLayer mlp;

    CrossBlock() = default;
    CrossBlock(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
               std::size_t mlp_hidden, real_t eps, Rng& rng);
    Tensor operator()(const Tensor& x, const Tensor& cond) const;
};

}  // namespace rdvla
