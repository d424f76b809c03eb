#pragma once

#include "rdvla/head.hpp"

namespace rdvla {

// Encoder + head bundled with their shared parameter registry. Copies share
// parameter storage (handle semantics).
struct Model {
    EncoderConfig ecfg;
    HeadConfig hcfg;
    ParamSet params;
    Encoder encoder;
    Head head;

    static Model build(const EncoderConfig& ecfg, const HeadConfig& hcfg, Rng& init_rng);

    ContextBundle encode_observation(const SimObservation& obs,
                                     const std::array<real_t, 3>& proprio) const;
};

}  // namespace rdvla
