#include "rdvla/rollout.hpp"

namespace rdvla {

namespace {
constexpr uint64_t kRolloutStream = 0x726f6c6cULL;
}

EpisodeOutcome rollout(const Model& model, const StopPolicy& stop, const ExecPolicy& exec,
                       int tier, uint64_t seed, int cap) {
    stop.validate(model.hcfg.max_iters);
    exec.validate(model.hcfg.horizon);
    SimState st = reset(tier, seed);
    Rng rng(seed_mix(static_cast<uint64_t>(tier), seed, kRolloutStream));

    EpisodeOutcome out;
    out.tier = tier;
    out.seed = seed;
    while (!st.success() && st.step_count < cap) {
        ContextBundle ctx = model.encode_observation(st.observation(), st.proprio());
        InferenceResult res = run_adaptive(ctx, stop, model.head, rng);
        const int h = exec_horizon(res.k_star, exec, static_cast<int>(model.hcfg.horizon));
        res.exec_horizon = h;

        DecisionRecord rec;
        rec.k_star = res.k_star;
        rec.exec_horizon = h;
        rec.mse_trace = res.mse_trace;
        out.decisions.push_back(std::move(rec));

        for (int i = 0; i < h && !st.success() && st.step_count < cap; ++i) {
            const auto* a = res.chunk.actions.data() + static_cast<std::size_t>(i) * 3;
            step(st, {a[0], a[1], a[2]});
        }
    }
    out.success = st.success();
    out.steps_used = st.step_count;
    return out;
}

}  // namespace rdvla
