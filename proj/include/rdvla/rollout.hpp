#pragma once

#include "rdvla/adaptive.hpp"
#include "rdvla/sim.hpp"

namespace rdvla {

struct DecisionRecord {
    int k_star = 0;
    int exec_horizon = 0;
    std::vector<double> mse_trace;
};

struct EpisodeOutcome {
    bool success = false;
    int steps_used = 0;
    int tier = 0;
    uint64_t seed = 0;
    std::vector<DecisionRecord> decisions;
};

// Closed loop: encode the observation, run the stopping policy, execute the
// first H_exec actions of the chunk, repeat until success or the step cap.
// (tier, seed, policies, params) fully determine the outcome.
EpisodeOutcome rollout(const Model& model, const StopPolicy& stop, const ExecPolicy& exec,
                       int tier, uint64_t seed, int cap);

}  // namespace rdvla
