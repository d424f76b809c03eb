#pragma once

#include "rdvla/config.hpp"

namespace rdvla {

// Single-file binary container: magic, format version, scalar width, then
// CRC-checksummed sections (config text, named parameter tensors, optimizer
// moments, RNG state, training step). Round trips are byte-exact.
void save_checkpoint(const std::string& path, const ExperimentConfig& cfg, const Model& model,
                     const AdamWState& opt, const Rng& rng, long long train_step);

struct LoadedCheckpoint {
    ExperimentConfig cfg;
    Model model;
    AdamWState opt;
    Rng rng;
    long long train_step = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace rdvla
