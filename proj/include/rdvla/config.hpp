#pragma once

#include <string>
#include <vector>

#include "rdvla/adaptive.hpp"
#include "rdvla/trainer.hpp"

namespace rdvla {

struct SimSection {
    std::vector<int> tiers{0, 1, 2};
    int eval_seeds = 100;
    uint64_t eval_seed_base = 0;
    int cap0 = 40;
    int cap1 = 80;
    int cap2 = 120;
    int demo_episodes = 100;
    uint64_t demo_seed = 1000;
    int demo_stride = 1;
    std::string demo_cache;  // optional binary demo container path

    int cap(int tier) const;
};

struct OutputSection {
    std::string dir = "out";
};

// Full experiment description. The on-disk format is `section.field = value`
// per line, '#' comments, with keys named exactly after these fields.
struct ExperimentConfig {
    EncoderConfig encoder;
    HeadConfig head;
    TrainConfig train;
    DepthSampler sampler;
    StopPolicy stop;
    ExecPolicy exec;
    SimSection sim;
    OutputSection output;

    // Collects every violation (per-section and cross-field) into one
    // ConfigError with a field-level report.
    void validate() const;
    // Canonical text round-trippable through parse_config_text.
    std::string dump() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string stop_kind_name(StopKind k);
StopKind stop_kind_from(const std::string& s);
std::string exec_kind_name(ExecKind k);
ExecKind exec_kind_from(const std::string& s);

}  // namespace rdvla
