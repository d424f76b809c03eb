#include "rdvla/encoder.hpp"

#include <cmath>

namespace rdvla {

void EncoderConfig::validate() const {
    if (d_model == 0 || layers == 0) throw ConfigError("encoder: d_model and layers must be positive");
    if (heads == 0 || d_model % heads != 0) {
        throw ConfigError("encoder: d_model " + std::to_string(d_model) +
                          " not divisible by heads " + std::to_string(heads));
    }
    if (mid_layer < 1 || mid_layer >= layers) {
        throw ConfigError("encoder: mid_layer must satisfy 1 <= mid_layer < layers, got " +
                          std::to_string(mid_layer) + " with layers " + std::to_string(layers));
    }
    if (n_latent == 0) throw ConfigError("encoder: n_latent must be positive");
    if (n_entity_max == 0) throw ConfigError("encoder: n_entity_max must be positive");
}

Encoder::Encoder(const EncoderConfig& cfg_in, ParamSet& ps, Rng& rng) : cfg(cfg_in) {
    cfg.validate();
    const std::size_t d = cfg.d_model;
    const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
    type_emb = ps.add("encoder.type_emb", Tensor::randn(4, d, rng, emb_std));
    pos_emb = ps.add("encoder.pos_emb", Tensor::randn(cfg.n_entity_max, d, rng, emb_std));
    latent_tokens = ps.add("encoder.latent_tokens", Tensor::randn(cfg.n_latent, d, rng, emb_std));
    feat_proj = LinearLayer(ps, "encoder.feat_proj", kEntityFeatures, d, rng, emb_std);
    proprio_proj = LinearLayer(ps, "encoder.proprio_proj", 3, d, rng, emb_std);
    blocks.reserve(cfg.layers);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        blocks.emplace_back(ps, "encoder.block" + std::to_string(l), d, cfg.heads, 4 * d,
                            cfg.eps, rng);
    }
    final_norm = RmsNormLayer(ps, "encoder.final_norm", d, cfg.eps);
}

Tensor Encoder::embed_observation(const SimObservation& obs) const {
    if (obs.entities.empty()) throw ConfigError("embed_observation: empty scene");
    if (obs.entities.size() > cfg.n_entity_max) {
        throw ConfigError("embed_observation: " + std::to_string(obs.entities.size()) +
                          " entities exceed capacity " + std::to_string(cfg.n_entity_max));
    }
    std::vector<Tensor> rows;
    rows.reserve(obs.entities.size());
    const real_t tier_feat = static_cast<real_t>(obs.tier) - 1;
    for (const auto& e : obs.entities) {
        Tensor feat = Tensor::from(1, kEntityFeatures,
                                   {2 * e.pos.x - 1, 2 * e.pos.y - 1, e.extra[0], e.extra[1],
                                    e.extra[2], tier_feat});
        const auto t = static_cast<std::size_t>(e.type);
        rows.push_back(add(feat_proj(feat), slice_rows(type_emb, t, t + 1)));
    }
    return concat_rows(rows);
}

Tensor Encoder::input_tokens(const Tensor& entity_toks) const {
    const std::size_t e = entity_toks.rows();
    Tensor ent = add(entity_toks, slice_rows(pos_emb, 0, e));
    return concat_rows({ent, latent_tokens});
}

ContextBundle Encoder::encode(const Tensor& entity_toks,
                              const std::array<real_t, 3>& proprio) const {
    const std::size_t e = entity_toks.rows();
    Tensor x = input_tokens(entity_toks);
    Tensor mid;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        x = blocks[l](x);
        if (l + 1 == cfg.mid_layer) mid = x;
    }
    Tensor final_feats = final_norm(x);
    ContextBundle ctx;
    ctx.mid_feats = mid;
    ctx.final_feats = final_feats;
    ctx.final_vis = slice_rows(final_feats, 0, e);
    ctx.final_lat = slice_rows(final_feats, e, e + cfg.n_latent);
    ctx.proprio_tok = proprio_proj(Tensor::from(1, 3, {proprio[0], proprio[1], proprio[2]}));
    ctx.n_entities = e;
    return ctx;
}

}  // namespace rdvla
