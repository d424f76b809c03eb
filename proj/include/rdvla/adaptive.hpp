#pragma once

#include "rdvla/model.hpp"

namespace rdvla {

enum class StopKind { fixed, pure_kl };

// When to stop unrolling: fixed depth, or first consecutive-chunk MSE below
// delta (checked from min_iters onward, capped at max_iters).
struct StopPolicy {
    StopKind kind = StopKind::pure_kl;
    int fixed_r = 8;
    double delta = 1e-3;
    int min_iters = 2;
    int max_iters = 32;

    void validate(std::size_t head_max_iters) const;
};

enum class ExecKind { full, binary, linear_decay };

// How many chunk steps to execute before replanning.
struct ExecPolicy {
    ExecKind kind = ExecKind::full;
    int tau = 8;  // binary reasoning threshold (h_long iff k* <= tau)
    int h_long = 8;
    int h_short = 4;
    int tau_base = 8;  // linear decay: max(h_min, h_max - max(0, k* - tau_base))
    int h_max = 8;
    int h_min = 2;

    void validate(std::size_t horizon) const;
};

struct InferenceResult {
    ActionChunk chunk;
    int k_star = 0;
    int exec_horizon = 0;  // filled by the execution policy (defaults to H)
    std::vector<double> mse_trace;  // length k_star - 1
};

// Unrolls with intermediate decoding, computing the mean squared difference
// between consecutive chunks. Stops at the first crossing below delta (or at
// fixed_r / max_iters). The returned chunk is the one decoded at k*.
InferenceResult run_adaptive(const ContextBundle& ctx, const StopPolicy& stop, const Head& head,
                             Rng& rng);

// Pure function of k*; result clamped to [1, horizon].
int exec_horizon(int k_star, const ExecPolicy& pol, int horizon);

struct CalibrationResult {
    double delta = 0;
    double achieved_mean = 0;
};

// Log-scale bisection over delta in [1e-8, 1] until the mean k* over the
// validation contexts is within +/-0.5 of the target. Per-context traces are
// deterministic (seeded per index), so mean k*(delta) is non-increasing.
CalibrationResult calibrate_delta(const std::vector<ContextBundle>& validation,
                                  const Head& head, double target_mean_iters,
                                  const StopPolicy& base, uint64_t seed);

}  // namespace rdvla
