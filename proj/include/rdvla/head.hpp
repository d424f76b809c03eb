#pragma once

#include "rdvla/encoder.hpp"

namespace rdvla {

struct HeadConfig {
    std::size_t k_queries = 8;
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t max_iters = 32;  // hard cap on unrolled depth
    double gamma_init = 1.0;
    double sigma_init = 0.0;  // <= 0 selects d_model^(-1/2)
    double trunc = 3.0;
    std::size_t action_dim = 3;
    std::size_t horizon = 8;
    real_t eps = real_t(1e-6);

    double scratch_std() const;
    void validate() const;
};

// The evolving latent state; one core application advances iter by one.
struct ScratchpadState {
    Tensor s;      // [K x D]
    Tensor s_pre;  // [K x D]
    int iter = 0;
};

struct ActionChunk {
    Tensor actions;  // [H x action_dim]
    int produced_at_iter = 0;
};

// Functional triplet over a latent scratchpad: a non-recurrent prelude
// grounds K learned queries in mid-layer context, one weight-tied core block
// refines the scratchpad (re-injecting the prelude output every step), and a
// non-recurrent coda decodes any intermediate state into an action chunk.
class Head {
  public:
    Head() = default;
    Head(const HeadConfig& cfg, ParamSet& ps, Rng& rng);

    // Queries self-attend, cross-attend to mid-layer features, MLP.
    Tensor prelude(const ContextBundle& ctx) const;
    // Fresh noise per forward pass: truncated normal, std gamma_init*sigma_init.
    Tensor init_scratchpad(Rng& rng) const;
    // x_k = RMSNorm(gamma_adapt * [s_prev ; s_pre] W_adapt)
    Tensor inject(const Tensor& s_prev, const Tensor& s_pre) const;
    // Rows attended by core and coda: final features plus proprio token.
    Tensor conditioning(const ContextBundle& ctx) const;
    ScratchpadState core_step(const ScratchpadState& state, const ContextBundle& ctx) const;
    ActionChunk coda(const ScratchpadState& state, const ContextBundle& ctx) const;
    // Unrolls r core applications. With emit_intermediate, decodes a chunk at
    // every iteration (length-r result); otherwise only at depth r.
    std::vector<ActionChunk> forward(const ContextBundle& ctx, int r, Rng& rng,
                                     bool emit_intermediate) const;

    HeadConfig cfg;
    Tensor queries;      // [K x D]
    CrossBlock prelude_block;
    Tensor w_adapt;      // [2D x D]
    Tensor gamma_adapt;  // [1x1]
    RmsNormLayer adapt_norm;
    CrossBlock core_block;  // the one weight-tied parameter set
    CrossBlock coda_block;
    RmsNormLayer coda_norm;
    LinearLayer w_out;  // per-position [D -> action_dim]
};

}  // namespace rdvla
