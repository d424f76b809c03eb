#include "rdvla/nn.hpp"

#include <cmath>

namespace rdvla {

Tensor ParamSet::add(const std::string& name, Tensor t) {
    for (const auto& [n, _] : items_) {
        if (n == name) throw UsageError("ParamSet: duplicate parameter name " + name);
    }
    t.set_requires_grad(true);
    items_.emplace_back(name, t);
    return t;
}

Tensor* ParamSet::find(const std::string& name) {
    for (auto& [n, t] : items_) {
        if (n == name) return &t;
    }
    return nullptr;
}

std::size_t ParamSet::total_elems() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items_) n += t.numel();
    return n;
}

void ParamSet::zero_grads() {
    for (auto& [_, t] : items_) t.zero_grad();
}

LinearLayer::LinearLayer(ParamSet& ps, const std::string& prefix, std::size_t in,
                         std::size_t out, Rng& rng, double w_std) {
    w = ps.add(prefix + ".w", Tensor::randn(in, out, rng, w_std));
    b = ps.add(prefix + ".b", Tensor::zeros(1, out));
}

RmsNormLayer::RmsNormLayer(ParamSet& ps, const std::string& prefix, std::size_t dim,
                           real_t eps_in) {
    gain = ps.add(prefix + ".gain", Tensor::full(1, dim, real_t(1)));
    eps = eps_in;
}

AttentionLayer::AttentionLayer(ParamSet& ps, const std::string& prefix, std::size_t dim,
                               std::size_t heads_in, Rng& rng)
    : heads(heads_in) {
    if (heads == 0 || dim % heads != 0) {
        throw ConfigError("AttentionLayer: dim " + std::to_string(dim) +
                          " not divisible by heads " + std::to_string(heads));
    }
    const double std_in = 1.0 / std::sqrt(static_cast<double>(dim));
    wq = LinearLayer(ps, prefix + ".wq", dim, dim, rng, std_in);
    wk = LinearLayer(ps, prefix + ".wk", dim, dim, rng, std_in);
    wv = LinearLayer(ps, prefix + ".wv", dim, dim, rng, std_in);
    // Residual-branch output projection starts small to keep deep unrolls tame.
    wo = LinearLayer(ps, prefix + ".wo", dim, dim, rng, 0.5 * std_in);
}

Tensor AttentionLayer::operator()(const Tensor& q_in, const Tensor& kv_in) const {
    Tensor q = wq(q_in);
    Tensor k = wk(kv_in);
    Tensor v = wv(kv_in);
    return wo(attention(q, k, v, heads));
}

MlpLayer::MlpLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t hidden,
                   Rng& rng) {
    fc1 = LinearLayer(ps, prefix + ".fc1", dim, hidden, rng,
                      1.0 / std::sqrt(static_cast<double>(dim)));
    fc2 = LinearLayer(ps, prefix + ".fc2", hidden, dim, rng,
                      0.5 / std::sqrt(static_cast<double>(hidden)));
}

SelfBlock::SelfBlock(ParamSet& ps, const std::string& prefix, std::size_t dim,
                     std::size_t heads, std::size_t mlp_hidden, real_t eps, Rng& rng) {
    n1 = RmsNormLayer(ps, prefix + ".n1", dim, eps);
    attn = AttentionLayer(ps, prefix + ".attn", dim, heads, rng);
    n2 = RmsNormLayer(ps, prefix + ".n2", dim, eps);
    mlp = MlpLayer(ps, prefix + ".mlp", dim, mlp_hidden, rng);
}

Tensor SelfBlock::operator()(const Tensor& x) const {
    Tensor h = n1(x);
    Tensor y = add(x, attn(h, h));
    return add(y, mlp(n2(y)));
}

CrossBlock::CrossBlock(ParamSet& ps, const std::string& prefix, std::size_t dim,
                       std::size_t heads, std::size_t mlp_hidden, real_t eps, Rng& rng) {
    n1 = RmsNormLayer(ps, prefix + ".n1", dim, eps);
    self_attn = AttentionLayer(ps, prefix + ".self_attn", dim, heads, rng);
    n2 = RmsNormLayer(ps, prefix + ".n2", dim, eps);
    cross_attn = AttentionLayer(ps, prefix + ".cross_attn", dim, heads, rng);
    gate = ps.add(prefix + ".gate", Tensor::zeros(1, 1));
    n3 = RmsNormLayer(ps, prefix + ".n3", dim, eps);
    mlp = MlpLayer(ps, prefix + ".mlp", dim, mlp_hidden, rng);
}

Tensor CrossBlock::operator()(const Tensor& x, const Tensor& cond) const {
    Tensor h = n1(x);
    Tensor y = add(x, self_attn(h, h));
    Tensor cross = scale_by(cross_attn(n2(y), cond), tanh_map(gate));
    Tensor z = add(y, cross);
    return add(z, mlp(n3(z)));
}

}  // namespace rdvla
