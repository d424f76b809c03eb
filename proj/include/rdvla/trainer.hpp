#pragma once

#include <functional>

#include "rdvla/model.hpp"
#include "rdvla/sim.hpp"

namespace rdvla {

// Heavy-tailed depth distribution for randomized-depth training:
// tau ~ Normal(ln(mu_rec) - 0.125, sigma^2), N ~ Poisson(e^tau) + 1.
struct DepthSampler {
    double mu_rec = 8.0;
    double sigma = 0.5;
    uint64_t seed = 7;
};

int sample_depth(const DepthSampler& s, Rng& rng);

struct TrainConfig {
    int tbptt_window = 4;  // d: gradient window over the final iterations
    int batch_size = 16;
    double learning_rate = 3e-4;
    double weight_decay = 0.01;
    int steps = 3000;
    double grad_clip_norm = 1.0;
    uint64_t seed = 42;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints

    void validate() const;
};

// Adaptive-moment optimizer state with decoupled weight decay. Moment
// buffers follow ParamSet order.
struct AdamWState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<std::vector<real_t>> m;
    std::vector<std::vector<real_t>> v;

    void init(const ParamSet& ps);
    bool initialized() const { return !m.empty(); }
};

void adamw_step(ParamSet& ps, AdamWState& opt, double lr, double weight_decay);

// Scales all gradients so the global norm is at most max_norm. Returns the
// pre-clip norm.
double clip_global_norm(ParamSet& ps, double max_norm);

// Unrolls N core applications; the first max(0, N-d) run outside the tape
// with the scratchpad carried as plain values, the final min(N, d) record
// gradients, then the coda decodes. Call under an active GradTape.
ActionChunk tbptt_forward(const Model& model, const ContextBundle& ctx, int n_iters, int window,
                          Rng& rng);

// Mean squared error over all H x action_dim entries.
Tensor chunk_loss(const ActionChunk& pred, const Tensor& target);

struct TrainStepInfo {
    int step = 0;
    double loss = 0;
    int depth = 0;
    double wall_ms = 0;
};

struct TrainingReport {
    std::vector<TrainStepInfo> steps;
    double first_loss = 0;
    double final_loss = 0;
};

struct TrainHooks {
    std::function<void(const TrainStepInfo&)> on_step;
    std::function<void(int)> on_checkpoint;  // called with the completed step index
};

// Imitation training: per step, sample a batch and one depth N, run
// tbptt_forward per sample, average chunk losses, clip, update. Throws
// TrainingDiverged naming the step on a non-finite loss. Resume by passing
// the restored optimizer/rng and start_step.
TrainingReport train(const std::vector<DemoSample>& dataset, const TrainConfig& cfg,
                     const DepthSampler& sampler, Model& model, AdamWState& opt, Rng& rng,
                     int start_step = 0, const TrainHooks& hooks = {});

Tensor chunk_to_tensor(const std::vector<std::array<real_t, 3>>& chunk);

}  // namespace rdvla
