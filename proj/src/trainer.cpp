#include "rdvla/trainer.hpp"

#include <chrono>
#include <cmath>

namespace rdvla {

int sample_depth(const DepthSampler& s, Rng& rng) {
    if (s.mu_rec <= 0) throw ConfigError("sample_depth: mu_rec must be positive");
    if (s.sigma < 0) throw ConfigError("sample_depth: sigma must be non-negative");
    const double tau = rng.normal(std::log(s.mu_rec) - 0.125, s.sigma);
    const uint64_t n = rng.poisson(std::exp(tau)) + 1;
    return static_cast<int>(n);
}

void TrainConfig::validate() const {
    if (tbptt_window < 1) throw ConfigError("train: tbptt_window must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (steps < 0) throw ConfigError("train: steps must be >= 0");
    if (learning_rate < 0) throw ConfigError("train: learning_rate must be >= 0");
    if (grad_clip_norm <= 0) throw ConfigError("train: grad_clip_norm must be positive");
}

void AdamWState::init(const ParamSet& ps) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& [_, p] : ps.items()) {
        m.emplace_back(p.numel(), real_t(0));
        v.emplace_back(p.numel(), real_t(0));
    }
}

void adamw_step(ParamSet& ps, AdamWState& opt, double lr, double weight_decay) {
    if (!opt.initialized()) opt.init(ps);
    if (opt.m.size() != ps.items().size()) {
        throw UsageError("adamw_step: optimizer state does not match parameter set");
    }
    ++opt.t;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
    std::size_t idx = 0;
    for (auto& [_, p] : ps.items_mut()) {
        auto& m = opt.m[idx];
        auto& v = opt.v[idx];
        real_t* w = p.data_mut();
        const bool has_g = p.has_grad();
        const real_t* g = has_g ? p.grad_data() : nullptr;
        const std::size_t n = p.numel();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = has_g ? static_cast<double>(g[i]) : 0.0;
            m[i] = static_cast<real_t>(opt.beta1 * m[i] + (1.0 - opt.beta1) * gi);
            v[i] = static_cast<real_t>(opt.beta2 * v[i] + (1.0 - opt.beta2) * gi * gi);
            const double mhat = static_cast<double>(m[i]) / bc1;
            const double vhat = static_cast<double>(v[i]) / bc2;
            const double upd = mhat / (std::sqrt(vhat) + opt.eps) +
                               weight_decay * static_cast<double>(w[i]);
            w[i] = static_cast<real_t>(static_cast<double>(w[i]) - lr * upd);
        }
        ++idx;
    }
}

double clip_global_norm(ParamSet& ps, double max_norm) {
    double sq = 0;
    for (const auto& [_, p] : ps.items()) {
        if (!p.has_grad()) continue;
        const real_t* g = p.grad_data();
        for (std::size_t i = 0; i < p.numel(); ++i) {
            sq += static_cast<double>(g[i]) * static_cast<double>(g[i]);
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0) {
        const real_t s = static_cast<real_t>(max_norm / norm);
        for (auto& [_, p] : ps.items_mut()) {
            if (!p.has_grad()) continue;
            real_t* g = p.impl()->grad.data();
            for (std::size_t i = 0; i < p.numel(); ++i) g[i] *= s;
        }
    }
    return norm;
}

ActionChunk tbptt_forward(const Model& model, const ContextBundle& ctx, int n_iters, int window,
                          Rng& rng) {
    if (n_iters < 1) throw ConfigError("tbptt_forward: N must be >= 1");
    if (window < 1) throw ConfigError("tbptt_forward: window must be >= 1");
    const Head& head = model.head;
    ScratchpadState state;
    state.s_pre = head.prelude(ctx);
    state.s = head.init_scratchpad(rng);
    state.iter = 0;
    const int prefix = n_iters > window ? n_iters - window : 0;
    if (prefix > 0) {
        // Gradient-free prefix: values only, scratchpad detached after each
        // step. s_pre and ctx reconnect to the tape through the windowed
        // steps below.
        NoGradGuard ng;
        for (int k = 0; k < prefix; ++k) state = head.core_step(state, ctx);
    }
    const int windowed = n_iters - prefix;
    for (int k = 0; k < windowed; ++k) state = head.core_step(state, ctx);
    return head.coda(state, ctx);
}

Tensor chunk_loss(const ActionChunk& pred, const Tensor& target) {
    return mse(pred.actions, target);
}

Tensor chunk_to_tensor(const std::vector<std::array<real_t, 3>>& chunk) {
    std::vector<real_t> flat;
    flat.reserve(chunk.size() * 3);
    for (const auto& row : chunk) {
        flat.push_back(row[0]);
        flat.push_back(row[1]);
        flat.push_back(row[2]);
    }
    return Tensor::from(chunk.size(), 3, std::move(flat));
}

TrainingReport train(const std::vector<DemoSample>& dataset, const TrainConfig& cfg,
                     const DepthSampler& sampler, Model& model, AdamWState& opt, Rng& rng,
                     int start_step, const TrainHooks& hooks) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("train: dataset is empty");
    if (!opt.initialized()) opt.init(model.params);

    TrainingReport report;
    report.steps.reserve(static_cast<std::size_t>(std::max(0, cfg.steps - start_step)));
    const int d = cfg.tbptt_window;
    const auto max_depth = static_cast<int>(model.hcfg.max_iters);

    for (int step = start_step; step < cfg.steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::size_t> batch(static_cast<std::size_t>(cfg.batch_size));
        for (auto& b : batch) b = rng.uniform_int(dataset.size());
        // One depth per batch keeps the unroll rectangular; clamp to the
        // head's hard cap.
        const int n = std::min(sample_depth(sampler, rng), max_depth);

        GradTape tape;
        Tensor loss_sum;
        for (std::size_t bi = 0; bi < batch.size(); ++bi) {
            const DemoSample& s = dataset[batch[bi]];
            ContextBundle ctx = model.encode_observation(s.observation, s.proprio);
            ActionChunk chunk = tbptt_forward(model, ctx, n, d, rng);
            Tensor li = chunk_loss(chunk, chunk_to_tensor(s.target_chunk));
            loss_sum = bi == 0 ? li : add(loss_sum, li);
        }
        Tensor loss = scale(loss_sum, real_t(1) / static_cast<real_t>(cfg.batch_size));
        const double lval = static_cast<double>(loss.item());
        if (!std::isfinite(lval)) {
            throw TrainingDiverged("train: non-finite loss at step " + std::to_string(step));
        }
        model.params.zero_grads();
        backward(loss);
        clip_global_norm(model.params, cfg.grad_clip_norm);
        adamw_step(model.params, opt, cfg.learning_rate, cfg.weight_decay);

        const auto t1 = std::chrono::steady_clock::now();
        TrainStepInfo info;
        info.step = step;
        info.loss = lval;
        info.depth = n;
        info.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        report.steps.push_back(info);
        if (hooks.on_step) hooks.on_step(info);
        if (cfg.checkpoint_every > 0 && hooks.on_checkpoint &&
            (step + 1) % cfg.checkpoint_every == 0) {
            hooks.on_checkpoint(step + 1);
        }
    }
    if (!report.steps.empty()) {
        report.first_loss = report.steps.front().loss;
        report.final_loss = report.steps.back().loss;
    }
    return report;
}

}  // namespace rdvla
