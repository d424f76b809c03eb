#pragma once

#include "rdvla/nn.hpp"
#include "rdvla/sim.hpp"

namespace rdvla {

struct EncoderConfig {
    std::size_t d_model = 64;
    std::size_t layers = 4;
    std::size_t heads = 4;
    std::size_t n_latent = 8;
    std::size_t n_entity_max = 16;
    std::size_t mid_layer = 2;  // hidden state tapped after this many blocks
    real_t eps = real_t(1e-6);

    void validate() const;
};

// Two feature depths plus the latent/vision partition and the embedded
// proprioception token: everything the head consumes.
struct ContextBundle {
    Tensor mid_feats;    // [(E+M) x D]
    Tensor final_feats;  // [(E+M) x D]
    Tensor final_vis;    // [E x D]
    Tensor final_lat;    // [M x D]
    Tensor proprio_tok;  // [1 x D]
    std::size_t n_entities = 0;
};

inline constexpr std::size_t kEntityFeatures = 6;  // x, y, extra[3], tier

// Small trainable transformer over structured entity tokens plus learned
// latent tokens.
class Encoder {
  public:
    Encoder() = default;
    Encoder(const EncoderConfig& cfg, ParamSet& ps, Rng& rng);

    // One token per entity: type embedding + projected continuous features.
    // Permutation-equivariant; position embeddings are added in encode().
    Tensor embed_observation(const SimObservation& obs) const;

    // Entity tokens + slot positions, latent tokens appended, L blocks, tap
    // at mid_layer, final norm, partition, proprio embedding.
    ContextBundle encode(const Tensor& entity_toks, const std::array<real_t, 3>& proprio) const;

    // Assembled block input (positions + latents); exposed for tests.
    Tensor input_tokens(const Tensor& entity_toks) const;

    EncoderConfig cfg;
    Tensor type_emb;       // [4 x D]
    Tensor pos_emb;        // [n_entity_max x D]
    Tensor latent_tokens;  // [M x D]
    LinearLayer feat_proj;
    LinearLayer proprio_proj;
    std::vector<SelfBlock> blocks;
    RmsNormLayer final_norm;
};

}  // namespace rdvla
