#include "rdvla/model.hpp"

namespace rdvla {

Model Model::build(const EncoderConfig& ecfg, const HeadConfig& hcfg, Rng& init_rng) {
    ecfg.validate();
    hcfg.validate();
    if (ecfg.d_model != hcfg.d_model) {
        throw ConfigError("model: encoder d_model " + std::to_string(ecfg.d_model) +
                          " differs from head d_model " + std::to_string(hcfg.d_model));
    }
    Model m;
    m.ecfg = ecfg;
    m.hcfg = hcfg;
    m.encoder = Encoder(ecfg, m.params, init_rng);
    m.head = Head(hcfg, m.params, init_rng);
    return m;
}

ContextBundle Model::encode_observation(const SimObservation& obs,
                                        const std::array<real_t, 3>& proprio) const {
    return encoder.encode(encoder.embed_observation(obs), proprio);
}

}  // namespace rdvla
