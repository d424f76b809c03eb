// End-to-end acceptance suite. Each numbered check prints one PASS/FAIL line;
// the binary exits nonzero if any fail.
//
// Checks 1-3 and 6-9 are quick. Checks 4, 5 and 10 evaluate the reference
// training config (about half an hour of single-core training); pass
// --checkpoint <file> to reuse an existing reference checkpoint, and
// --config <file> to point at a different experiment description.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "rdvla/checkpoint.hpp"
#include "rdvla/harness.hpp"

using namespace rdvla;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

Model head_test_model(uint64_t seed) {
    EncoderConfig e;
    e.d_model = 16;
    e.layers = 2;
    e.heads = 2;
    e.n_latent = 2;
    e.n_entity_max = 8;
    e.mid_layer = 1;
    HeadConfig h;
    h.k_queries = 4;
    h.d_model = 16;
    h.heads = 2;
    h.max_iters = 64;
    h.horizon = 4;
    h.action_dim = 3;
    Rng rng(seed);
    Model m = Model::build(e, h, rng);
    m.params.find("head.prelude.gate")->fill(real_t(0.4));
    m.params.find("head.core.gate")->fill(real_t(0.4));
    m.params.find("head.coda.gate")->fill(real_t(0.4));
    return m;
}

// ---- 1: gradient correctness ----

double fd_max_rel_err_primitives() {
    double worst = 0;
    Rng rng(101);

    auto check_tensor_grads = [&worst](std::vector<Tensor> leaves,
                                       const std::function<Tensor()>& loss_fn) {
        for (auto& t : leaves) {
            t.set_requires_grad(true);
            t.zero_grad();
        }
        {
            GradTape tape;
            backward(loss_fn());
        }
        const double h = 1e-5;
        for (auto& t : leaves) {
            for (std::size_t i = 0; i < t.numel(); ++i) {
                real_t* slot = t.data_mut() + i;
                const real_t orig = *slot;
                *slot = orig + static_cast<real_t>(h);
                const double fp = double(loss_fn().item());
                *slot = orig - static_cast<real_t>(h);
                const double fm = double(loss_fn().item());
                *slot = orig;
                const double fd = (fp - fm) / (2 * h);
                const double ad = t.has_grad() ? double(t.grad_data()[i]) : 0.0;
                worst = std::max(worst, rel_err(ad, fd));
            }
        }
    };

    // matmul
    {
        Tensor a = Tensor::randn(4, 5, rng, 1.0), b = Tensor::randn(5, 3, rng, 1.0);
        Tensor w = Tensor::randn(4, 3, rng, 1.0);
        check_tensor_grads({a, b}, [&] { return sum_all(mul(matmul(a, b), w)); });
    }
    // rms_norm
    {
        Tensor x = Tensor::randn(2, 8, rng, 1.0), g = Tensor::randn(1, 8, rng, 1.0);
        Tensor w = Tensor::randn(2, 8, rng, 1.0);
        check_tensor_grads({x, g}, [&] { return sum_all(mul(rms_norm(x, g, real_t(1e-6)), w)); });
    }
    // attention
    {
        Tensor q = Tensor::randn(3, 8, rng, 0.7), k = Tensor::randn(3, 8, rng, 0.7);
        Tensor v = Tensor::randn(3, 8, rng, 0.7);
        Tensor w = Tensor::randn(3, 8, rng, 1.0);
        check_tensor_grads({q, k, v}, [&] { return sum_all(mul(attention(q, k, v, 2), w)); });
    }
    // gelu / tanh / scale_by / concat / slice
    {
        Tensor a = Tensor::randn(3, 4, rng, 1.0), b = Tensor::randn(3, 4, rng, 1.0);
        Tensor g = Tensor::randn(1, 1, rng, 0.5);
        Tensor w = Tensor::randn(6, 4, rng, 1.0);
        check_tensor_grads({a, b, g}, [&] {
            Tensor top = gelu(add(a, scale_by(tanh_map(b), g)));
            Tensor stack = concat_rows({top, slice_rows(top, 0, 3)});
            return sum_all(mul(stack, w));
        });
    }
    return worst;
}

double fd_max_rel_err_full_head() {
    Model m = head_test_model(777);
    SimState st = reset(2, 5);
    const SimObservation obs = st.observation();
    const auto prop = st.proprio();
    Rng wr(9);
    Tensor w = Tensor::randn(m.hcfg.horizon, m.hcfg.action_dim, wr, 1.0);

    auto loss_fn = [&]() {
        ContextBundle ctx = m.encode_observation(obs, prop);
        Rng rng(4);
        auto chunks = m.head.forward(ctx, 4, rng, false);
        return sum_all(mul(chunks[0].actions, w));
    };

    m.params.zero_grads();
    {
        GradTape tape;
        backward(loss_fn());
    }
    // Central differences on a deterministic subset of coordinates of every
    // named parameter tensor.
    double worst = 0;
    const double h = 1e-5;
    Rng pick(31);
    for (auto& [name, t] : m.params.items_mut()) {
        const std::size_t probes = std::min<std::size_t>(3, t.numel());
        for (std::size_t p = 0; p < probes; ++p) {
            const std::size_t i = pick.uniform_int(t.numel());
            real_t* slot = t.data_mut() + i;
            const real_t orig = *slot;
            *slot = orig + static_cast<real_t>(h);
            const double fp = double(loss_fn().item());
            *slot = orig - static_cast<real_t>(h);
            const double fm = double(loss_fn().item());
            *slot = orig;
            const double fd = (fp - fm) / (2 * h);
            const double ad = t.has_grad() ? double(t.grad_data()[i]) : 0.0;
            worst = std::max(worst, rel_err(ad, fd));
        }
    }
    return worst;
}

// ---- 2: TBPTT oracle ----

double tbptt_vs_full_bptt_max_diff() {
    double worst = 0;
    for (uint64_t cfg_seed = 0; cfg_seed < 20; ++cfg_seed) {
        Model m = head_test_model(900 + cfg_seed);
        SimState st = reset(static_cast<int>(cfg_seed % 3), cfg_seed);
        const int d = 2 + static_cast<int>(cfg_seed % 3);       // window in [2, 4]
        const int n = 1 + static_cast<int>(cfg_seed % d);       // N <= d
        Tensor target = Tensor::full(m.hcfg.horizon, 3, real_t(0.1));

        auto grads_with = [&](bool use_tbptt) {
            m.params.zero_grads();
            GradTape tape;
            ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
            Rng rng(55 + cfg_seed);
            ActionChunk chunk;
            if (use_tbptt) {
                chunk = tbptt_forward(m, ctx, n, d, rng);
            } else {
                ScratchpadState state;
                state.s_pre = m.head.prelude(ctx);
                state.s = m.head.init_scratchpad(rng);
                for (int k = 0; k < n; ++k) state = m.head.core_step(state, ctx);
                chunk = m.head.coda(state, ctx);
            }
            backward(chunk_loss(chunk, target));
            std::vector<double> g;
            for (const auto& [_, t] : m.params.items()) {
                for (std::size_t i = 0; i < t.numel(); ++i) {
                    g.push_back(t.has_grad() ? double(t.grad_data()[i]) : 0.0);
                }
            }
            return g;
        };
        const auto a = grads_with(true);
        const auto b = grads_with(false);
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max(worst, std::fabs(a[i] - b[i]));
        }
    }
    return worst;
}

// ---- shared eval plumbing for 4/5/10 ----

struct ReferenceModel {
    ExperimentConfig cfg;
    Model model;
};

ReferenceModel obtain_reference(const std::string& config_path,
                                const std::string& checkpoint_path) {
    if (!checkpoint_path.empty()) {
        std::printf("  .. loading reference checkpoint %s\n", checkpoint_path.c_str());
        LoadedCheckpoint lc = load_checkpoint(checkpoint_path);
        return {lc.cfg, lc.model};
    }
    ExperimentConfig cfg = load_config(config_path);
    cfg.validate();
    std::printf("  .. training the reference model (%d steps; this is the slow part)\n",
                cfg.train.steps);
    std::fflush(stdout);
    Rng init(seed_mix(cfg.train.seed, 0x696e6974ULL));
    Model model = Model::build(cfg.encoder, cfg.head, init);
    AdamWState opt;
    opt.init(model.params);
    Rng rng(seed_mix(cfg.train.seed, 0x747261696eULL));
    auto demos = collect_demos(cfg.sim.tiers, cfg.sim.demo_episodes,
                               static_cast<int>(cfg.head.horizon), cfg.sim.demo_seed,
                               cfg.sim.demo_stride);
    DepthSampler sampler = cfg.sampler;
    TrainHooks hooks;
    hooks.on_step = [](const TrainStepInfo& info) {
        if ((info.step + 1) % 500 == 0) {
            std::printf("  .. step %d loss %.5f\n", info.step + 1, info.loss);
            std::fflush(stdout);
        }
    };
    train(demos, cfg.train, sampler, model, opt, rng, 0, hooks);
    return {cfg, model};
}

double tier_success_at_depth(const ReferenceModel& ref, int tier, int depth, int seeds) {
    StopPolicy stop;
    stop.kind = StopKind::fixed;
    stop.fixed_r = depth;
    stop.max_iters = static_cast<int>(ref.model.hcfg.max_iters);
    ExecPolicy exec;
    exec.kind = ExecKind::full;
    exec.h_long = exec.h_max = static_cast<int>(ref.model.hcfg.horizon);
    exec.h_short = exec.h_min = 1;
    CellStats st = eval_cell(ref.model, stop, exec, {tier}, seeds, ref.cfg.sim.eval_seed_base,
                             ref.cfg.sim);
    return st.success_rate;
}

}  // namespace

int main(int argc, char** argv) {
    std::string config_path;
    std::string checkpoint_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_path = argv[++i];
        if (arg == "--checkpoint" && i + 1 < argc) checkpoint_path = argv[++i];
    }
    if (config_path.empty()) {
#ifdef RDVLA_SOURCE_DIR
        config_path = std::string(RDVLA_SOURCE_DIR) + "/configs/reference.cfg";
#else
        config_path = "configs/reference.cfg";
#endif
    }

    // 1. Gradient correctness: primitives + full head vs central differences.
    {
        Timer t;
        const double prim = fd_max_rel_err_primitives();
        const double head = fd_max_rel_err_full_head();
        const double worst = std::max(prim, head);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "max rel err %.3g (primitives %.3g, head %.3g), %.1fs",
                      worst, prim, head, t.seconds());
        report(1, "gradient-correctness", worst < 1e-4 && t.seconds() < 60, buf);
    }

    // 2. TBPTT/BPTT equivalence for N <= d over 20 random configurations.
    {
        Timer t;
        const double diff = tbptt_vs_full_bptt_max_diff();
        char buf[120];
        std::snprintf(buf, sizeof(buf), "max abs grad diff %.3g, %.1fs", diff, t.seconds());
        report(2, "tbptt-oracle-equivalence", diff < 1e-10 && t.seconds() < 60, buf);
    }

    // 3. Depth-sampler statistics at sigma = 0.5.
    {
        Timer t;
        DepthSampler s;
        s.mu_rec = 8.0;
        s.sigma = 0.5;
        Rng rng(3);
        const int n = 100000;
        std::vector<int> xs(n);
        double mean = 0;
        int mn = 1 << 30;
        for (int i = 0; i < n; ++i) {
            xs[i] = sample_depth(s, rng);
            mean += xs[i];
            mn = std::min(mn, xs[i]);
        }
        mean /= n;
        double m2 = 0, m3 = 0;
        for (int x : xs) {
            m2 += (x - mean) * (x - mean);
            m3 += (x - mean) * (x - mean) * (x - mean);
        }
        m2 /= n;
        m3 /= n;
        const double skew = m3 / std::pow(m2, 1.5);
        const bool ok = std::fabs(mean - 9.0) / 9.0 < 0.01 && mn >= 1 && skew > 0 &&
                        t.seconds() < 10;
        char buf[120];
        std::snprintf(buf, sizeof(buf), "mean %.4f (target 9 +/- 1%%), min %d, skew %.2f, %.1fs",
                      mean, mn, skew, t.seconds());
        report(3, "depth-sampler-statistics", ok, buf);
    }

    // 6. Stopping monotonicity over a 6-value delta grid (deterministic).
    {
        Model m = head_test_model(606);
        std::vector<ContextBundle> ctxs;
        for (uint64_t s = 0; s < 8; ++s) {
            SimState st = reset(static_cast<int>(s % 3), s);
            ctxs.push_back(m.encode_observation(st.observation(), st.proprio()));
        }
        const double grid[] = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
        bool monotone = true;
        double prev = 1e18;
        std::string means;
        for (double delta : grid) {
            double acc = 0;
            for (std::size_t i = 0; i < ctxs.size(); ++i) {
                StopPolicy stop;
                stop.kind = StopKind::pure_kl;
                stop.delta = delta;
                stop.max_iters = 32;
                Rng rng(seed_mix(11, i));
                acc += run_adaptive(ctxs[i], stop, m.head, rng).k_star;
            }
            const double mk = acc / double(ctxs.size());
            monotone = monotone && (mk <= prev);
            prev = mk;
            char b[32];
            std::snprintf(b, sizeof(b), "%.2f ", mk);
            means += b;
        }
        report(6, "stopping-monotonicity", monotone, "mean k* over grid: " + means);
    }

    // 7. Execution formulas vs brute force over k* in [1, 32] x parameter grid.
    {
        bool ok = true;
        long checked = 0;
        for (int tau : {1, 2, 4, 8, 16, 32}) {
            for (int h_long : {2, 4, 8}) {
                for (int h_short : {1, 2, 4}) {
                    if (h_short > h_long) continue;
                    ExecPolicy p;
                    p.kind = ExecKind::binary;
                    p.tau = tau;
                    p.h_long = h_long;
                    p.h_short = h_short;
                    for (int k = 1; k <= 32; ++k) {
                        const int expect = k <= tau ? h_long : h_short;
                        ok = ok && exec_horizon(k, p, 8) == std::min(8, std::max(1, expect));
                        ++checked;
                    }
                }
            }
        }
        for (int tau_base : {1, 2, 4, 8, 16, 32}) {
            for (int h_max : {2, 4, 8}) {
                for (int h_min : {1, 2}) {
                    ExecPolicy p;
                    p.kind = ExecKind::linear_decay;
                    p.tau_base = tau_base;
                    p.h_max = h_max;
                    p.h_min = h_min;
                    for (int k = 1; k <= 32; ++k) {
                        const int expect =
                            std::max(h_min, h_max - std::max(0, k - tau_base));
                        ok = ok && exec_horizon(k, p, 8) == std::min(8, std::max(1, expect));
                        ++checked;
                    }
                }
            }
        }
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%ld cells, boundary k*=tau inclusive", checked);
        report(7, "execution-formulas", ok, buf);
    }

    // 8. Constant-memory inference: peak live allocation at r=32 vs r=4.
    {
        Model m = head_test_model(808);
        SimState st = reset(2, 3);
        auto peak_at = [&](int r) {
            ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
            Rng rng(1);
            AllocStats::reset_peak();
            m.head.forward(ctx, r, rng, false);
            return AllocStats::peak_elems();
        };
        const long long p4 = peak_at(4);
        const long long p32 = peak_at(32);
        const bool ok = double(p32) <= 1.1 * double(p4);
        char buf[120];
        std::snprintf(buf, sizeof(buf), "peak elems r=4: %lld, r=32: %lld (ratio %.3f)", p4,
                      p32, double(p32) / double(p4));
        report(8, "constant-memory-inference", ok, buf);
    }

    // 9. Determinism and persistence: seeded reruns and checkpoint resume.
    {
        ExperimentConfig cfg;
        cfg.encoder.d_model = 16;
        cfg.encoder.layers = 2;
        cfg.encoder.heads = 2;
        cfg.encoder.n_latent = 2;
        cfg.encoder.mid_layer = 1;
        cfg.head.d_model = 16;
        cfg.head.heads = 2;
        cfg.head.k_queries = 4;
        cfg.head.horizon = 4;
        cfg.head.max_iters = 16;
        cfg.stop.max_iters = 16;
        cfg.exec.h_long = 4;
        cfg.exec.h_max = 4;
        cfg.exec.h_short = 2;
        cfg.exec.h_min = 1;
        cfg.sim.tiers = {0};
        cfg.sim.demo_episodes = 2;
        cfg.train.batch_size = 4;

        auto run_train = [&](int total, int resume_at, std::vector<real_t>* blob) {
            Rng init(seed_mix(cfg.train.seed, 1));
            Model m = Model::build(cfg.encoder, cfg.head, init);
            AdamWState opt;
            opt.init(m.params);
            Rng rng(seed_mix(cfg.train.seed, 2));
            auto demos = collect_demos(cfg.sim.tiers, cfg.sim.demo_episodes, 4,
                                       cfg.sim.demo_seed);
            TrainConfig tc = cfg.train;
            DepthSampler sampler = cfg.sampler;
            const auto tmp = fs::temp_directory_path() / "rdvla_acc_resume.ckpt";
            if (resume_at > 0) {
                tc.steps = resume_at;
                train(demos, tc, sampler, m, opt, rng);
                save_checkpoint(tmp.string(), cfg, m, opt, rng, resume_at);
                LoadedCheckpoint lc = load_checkpoint(tmp.string());
                TrainConfig tc2 = lc.cfg.train;
                tc2.steps = total;
                DepthSampler s2 = lc.cfg.sampler;
                train(demos, tc2, s2, lc.model, lc.opt, lc.rng, resume_at);
                for (const auto& [_, t] : lc.model.params.items()) {
                    blob->insert(blob->end(), t.data(), t.data() + t.numel());
                }
            } else {
                tc.steps = total;
                train(demos, tc, sampler, m, opt, rng);
                for (const auto& [_, t] : m.params.items()) {
                    blob->insert(blob->end(), t.data(), t.data() + t.numel());
                }
            }
        };
        std::vector<real_t> full, resumed, rerun;
        run_train(12, 0, &full);
        run_train(12, 0, &rerun);
        run_train(12, 6, &resumed);
        const bool ok = full == rerun && full == resumed;
        report(9, "determinism-and-persistence", ok,
               ok ? "rerun and 6+6 resume both bit-identical to 12 straight steps"
                  : "parameter mismatch");
    }

    // --- slow block: reference model for 4, 5, 10 ---
    ReferenceModel ref = obtain_reference(config_path, checkpoint_path);
    const int seeds = ref.cfg.sim.eval_seeds;

    // 4. Compute scaling on the hard tier across fixed depths.
    {
        Timer t;
        const int depths[] = {1, 2, 4, 8};
        double succ[4];
        std::string detail;
        for (int i = 0; i < 4; ++i) {
            succ[i] = tier_success_at_depth(ref, 2, depths[i], seeds);
            char b[40];
            std::snprintf(b, sizeof(b), "r=%d: %.0f%%  ", depths[i], 100 * succ[i]);
            detail += b;
        }
        bool ok = succ[0] <= 0.30 && succ[3] >= 0.80;
        for (int i = 1; i < 4; ++i) ok = ok && (succ[i] >= succ[i - 1] - 0.03);
        char b[40];
        std::snprintf(b, sizeof(b), "(%.0fs)", t.seconds());
        report(4, "compute-scaling-hard-tier", ok, detail + b);
    }

    // 5. Adaptive parity at a calibrated threshold.
    {
        Timer t;
        // Fixed r=8 baseline over all tiers.
        StopPolicy fixed;
        fixed.kind = StopKind::fixed;
        fixed.fixed_r = 8;
        fixed.max_iters = static_cast<int>(ref.model.hcfg.max_iters);
        ExecPolicy full;
        full.kind = ExecKind::full;
        full.h_long = full.h_max = static_cast<int>(ref.model.hcfg.horizon);
        full.h_short = full.h_min = 1;
        CellStats fixed_stats = eval_cell(ref.model, fixed, full, ref.cfg.sim.tiers, seeds,
                                          ref.cfg.sim.eval_seed_base, ref.cfg.sim);

        // Calibrate delta for mean k* <= 0.7 * 8 over validation contexts.
        std::vector<ContextBundle> contexts;
        for (int tier : ref.cfg.sim.tiers) {
            for (int i = 0; i < std::min(seeds, 30); ++i) {
                SimState st = reset(tier, ref.cfg.sim.eval_seed_base + uint64_t(i));
                contexts.push_back(
                    ref.model.encode_observation(st.observation(), st.proprio()));
            }
        }
        StopPolicy base;
        base.kind = StopKind::pure_kl;
        base.min_iters = 2;
        base.max_iters = static_cast<int>(ref.model.hcfg.max_iters);
        CalibrationResult cal = calibrate_delta(contexts, ref.model.head, 5.0, base, 404);

        StopPolicy adaptive = base;
        adaptive.delta = cal.delta;
        CellStats ad = eval_cell(ref.model, adaptive, full, ref.cfg.sim.tiers, seeds,
                                 ref.cfg.sim.eval_seed_base, ref.cfg.sim);
        const bool ok = ad.mean_k <= 0.7 * 8.0 + 1e-9 &&
                        std::fabs(ad.success_rate - fixed_stats.success_rate) <= 0.05 &&
                        fixed_stats.std_k == 0.0 && ad.std_k > 0.0;
        char buf[220];
        std::snprintf(buf, sizeof(buf),
                      "fixed r=8: %.0f%% (std_k %.2f) | adaptive delta %.2g: %.0f%% mean_k "
                      "%.2f std_k %.2f (%.0fs)",
                      100 * fixed_stats.success_rate, fixed_stats.std_k, cal.delta,
                      100 * ad.success_rate, ad.mean_k, ad.std_k, t.seconds());
        report(5, "adaptive-parity", ok, buf);
    }

    // 10. Latent convergence on the trained model over k in [4, 16].
    {
        Timer t;
        const int kmax = 16;
        std::vector<double> mean_mse(static_cast<std::size_t>(kmax) + 1, 0.0);
        int n_ctx = 0;
        for (int tier : ref.cfg.sim.tiers) {
            for (int i = 0; i < 34; ++i) {  // ~100 held-out contexts over 3 tiers
                SimState st = reset(tier, ref.cfg.sim.eval_seed_base + uint64_t(i));
                ContextBundle ctx =
                    ref.model.encode_observation(st.observation(), st.proprio());
                StopPolicy probe;
                probe.kind = StopKind::fixed;
                probe.fixed_r = kmax;
                probe.max_iters = static_cast<int>(ref.model.hcfg.max_iters);
                Rng rng(seed_mix(1010, uint64_t(tier), uint64_t(i)));
                InferenceResult res = run_adaptive(ctx, probe, ref.model.head, rng);
                for (int k = 2; k <= kmax; ++k) {
                    mean_mse[static_cast<std::size_t>(k)] +=
                        res.mse_trace[static_cast<std::size_t>(k - 2)];
                }
                ++n_ctx;
            }
        }
        for (auto& v : mean_mse) v /= std::max(1, n_ctx);
        int violations = 0, pairs = 0;
        for (int k = 5; k <= kmax; ++k) {
            ++pairs;
            if (mean_mse[static_cast<std::size_t>(k)] >
                mean_mse[static_cast<std::size_t>(k - 1)]) {
                ++violations;
            }
        }
        const bool ok = double(violations) / pairs <= 0.10 + 1e-12;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%d contexts, %d/%d increasing pairs, mse[4]=%.2e mse[16]=%.2e (%.0fs)",
                      n_ctx, violations, pairs, mean_mse[4], mean_mse[16], t.seconds());
        report(10, "latent-convergence", ok, buf);
    }

    std::printf("\n%s: %d failure(s)\n", g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
