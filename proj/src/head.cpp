#include "rdvla/head.hpp"

#include <cmath>

namespace rdvla {

double HeadConfig::scratch_std() const {
    const double sigma = sigma_init > 0 ? sigma_init : 1.0 / std::sqrt(static_cast<double>(d_model));
    return gamma_init * sigma;
}

void HeadConfig::validate() const {
    if (k_queries < 1) throw ConfigError("head: k_queries must be >= 1");
    if (max_iters < 1) throw ConfigError("head: max_iters must be >= 1");
    if (trunc <= 0) throw ConfigError("head: trunc must be positive");
    if (heads == 0 || d_model % heads != 0) {
        throw ConfigError("head: d_model " + std::to_string(d_model) +
                          " not divisible by heads " + std::to_string(heads));
    }
    if (k_queries != horizon) {
        throw ConfigError("head: k_queries (" + std::to_string(k_queries) +
                          ") must equal horizon (" + std::to_string(horizon) +
                          "): scratchpad rows decode one-to-one to chunk steps");
    }
    if (gamma_init <= 0) throw ConfigError("head: gamma_init must be positive");
    if (action_dim == 0) throw ConfigError("head: action_dim must be positive");
}

Head::Head(const HeadConfig& cfg_in, ParamSet& ps, Rng& rng) : cfg(cfg_in) {
    cfg.validate();
    const std::size_t d = cfg.d_model;
    const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
    queries = ps.add("head.queries", Tensor::randn(cfg.k_queries, d, rng, emb_std));
    prelude_block = CrossBlock(ps, "head.prelude", d, cfg.heads, 4 * d, cfg.eps, rng);
    w_adapt = ps.add("head.w_adapt",
                     Tensor::randn(2 * d, d, rng, 1.0 / std::sqrt(2.0 * static_cast<double>(d))));
    gamma_adapt = ps.add("head.gamma_adapt", Tensor::full(1, 1, real_t(1)));
    adapt_norm = RmsNormLayer(ps, "head.adapt_norm", d, cfg.eps);
    core_block = CrossBlock(ps, "head.core", d, cfg.heads, 4 * d, cfg.eps, rng);
    coda_block = CrossBlock(ps, "head.coda", d, cfg.heads, 4 * d, cfg.eps, rng);
    coda_norm = RmsNormLayer(ps, "head.coda_norm", d, cfg.eps);
    w_out = LinearLayer(ps, "head.w_out", d, cfg.action_dim, rng, 0.01);
}

Tensor Head::prelude(const ContextBundle& ctx) const {
    return prelude_block(queries, ctx.mid_feats);
}

Tensor Head::init_scratchpad(Rng& rng) const {
    Tensor s0(cfg.k_queries, cfg.d_model);
    const double sd = cfg.scratch_std();
    for (std::size_t i = 0; i < s0.numel(); ++i) {
        s0.data_mut()[i] = static_cast<real_t>(rng.trunc_normal(sd, cfg.trunc));
    }
    return s0;
}

Tensor Head::inject(const Tensor& s_prev, const Tensor& s_pre) const {
    Tensor cat = concat_cols(s_prev, s_pre);
    return adapt_norm(scale_by(matmul(cat, w_adapt), gamma_adapt));
}

Tensor Head::conditioning(const ContextBundle& ctx) const {
    return concat_rows({ctx.final_feats, ctx.proprio_tok});
}

ScratchpadState Head::core_step(const ScratchpadState& state, const ContextBundle& ctx) const {
    if (state.iter >= static_cast<int>(cfg.max_iters)) {
        throw BudgetError("core_step: iteration " + std::to_string(state.iter) +
                          " would exceed max_iters " + std::to_string(cfg.max_iters));
    }
    Tensor x = inject(state.s, state.s_pre);
    ScratchpadState next;
    next.s = core_block(x, conditioning(ctx));
    next.s_pre = state.s_pre;
    next.iter = state.iter + 1;
    return next;
}

ActionChunk Head::coda(const ScratchpadState& state, const ContextBundle& ctx) const {
    Tensor c = coda_block(state.s, conditioning(ctx));
    Tensor a = w_out(coda_norm(c));
    if (!grad_recording() && !all_finite(a)) {
        throw std::runtime_error("coda: non-finite action chunk at iteration " +
                                 std::to_string(state.iter));
    }
    ActionChunk chunk;
    chunk.actions = a;
    chunk.produced_at_iter = state.iter;
    return chunk;
}

std::vector<ActionChunk> Head::forward(const ContextBundle& ctx, int r, Rng& rng,
                                       bool emit_intermediate) const {
    if (r < 1 || r > static_cast<int>(cfg.max_iters)) {
        throw BudgetError("forward: depth " + std::to_string(r) + " outside [1, " +
                          std::to_string(cfg.max_iters) + "]");
    }
    ScratchpadState state;
    state.s_pre = prelude(ctx);
    state.s = init_scratchpad(rng);
    state.iter = 0;
    std::vector<ActionChunk> chunks;
    if (emit_intermediate) chunks.reserve(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) {
        state = core_step(state, ctx);
        if (emit_intermediate) chunks.push_back(coda(state, ctx));
    }
    if (!emit_intermediate) chunks.push_back(coda(state, ctx));
    return chunks;
}

}  // namespace rdvla
