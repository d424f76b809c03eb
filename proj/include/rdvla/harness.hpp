#pragma once

#include <functional>
#include <map>
#include <optional>

#include "rdvla/checkpoint.hpp"
#include "rdvla/metrics.hpp"
#include "rdvla/rollout.hpp"

namespace rdvla {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitIo = 4;

struct CliOptions {
    std::string config_path;
    std::string checkpoint_path;
    std::string out_dir;  // overrides output.dir when set
    std::optional<uint64_t> seed;
    std::vector<int> depths{1, 2, 4, 8};
    std::vector<int> tiers;                // empty: use config
    std::vector<double> deltas;            // empty: default grid
    std::vector<std::string> strategies;   // empty: default set
    int eval_seeds = 0;                    // 0: use config
    double target_iters = 0;               // calibrate-delta
    long long draws = 100000;              // sample-recurrence
    std::string demos_csv;                 // optional CSV export on train
};

int cmd_train(const CliOptions& opts);
int cmd_sweep_depth(const CliOptions& opts);
int cmd_sweep_adaptive(const CliOptions& opts);
int cmd_rollout(const CliOptions& opts);
int cmd_sample_recurrence(const CliOptions& opts);
int cmd_calibrate_delta(const CliOptions& opts);

// Runs fn and maps exceptions onto the exit-code contract
// (0 ok, 2 config, 3 runtime/NaN, 4 I/O).
int run_cli(const std::function<int()>& fn);

// Aggregates over one policy cell evaluated on tiers x seeds.
struct CellStats {
    int episodes = 0;
    int successes = 0;
    double success_rate = 0;
    double mean_steps = 0;
    double mean_k = 0;
    double std_k = 0;
    double mean_hexec = 0;
    std::map<int, long long> exit_counts;  // decisions per k*
};

// Rollouts parallelize across (tier, seed) with deterministic per-episode
// seeding; outcomes land in fixed slots so aggregation order is stable.
CellStats eval_cell(const Model& model, const StopPolicy& stop, const ExecPolicy& exec,
                    const std::vector<int>& tiers, int n_seeds, uint64_t seed_base,
                    const SimSection& sim,
                    std::vector<EpisodeOutcome>* episodes_out = nullptr);

// Cached demo collection per the config (load demo_cache if present, else
// collect and optionally fill the cache).
std::vector<DemoSample> obtain_demos(const ExperimentConfig& cfg);

}  // namespace rdvla
