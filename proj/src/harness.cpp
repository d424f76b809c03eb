#include "rdvla/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace rdvla {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint64_t kInitStream = 0x696e6974ULL;
constexpr uint64_t kTrainStream = 0x747261696eULL;

ExperimentConfig require_config(const CliOptions& opts) {
    if (opts.config_path.empty()) throw ConfigError("missing --config");
    ExperimentConfig cfg = load_config(opts.config_path);
    cfg.validate();
    return cfg;
}

std::string ensure_out_dir(const CliOptions& opts, const ExperimentConfig& cfg) {
    const std::string dir = opts.out_dir.empty() ? cfg.output.dir : opts.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

std::vector<int> pick_tiers(const CliOptions& opts, const ExperimentConfig& cfg) {
    const auto tiers = opts.tiers.empty() ? cfg.sim.tiers : opts.tiers;
    for (int t : tiers) {
        if (t < 0 || t > 2) throw ConfigError("invalid tier " + std::to_string(t));
    }
    return tiers;
}

// Eval sections (sim/stop/exec/output) may be overridden by a CLI config;
// the model always comes from the checkpoint's embedded config.
struct EvalSetup {
    ExperimentConfig cfg;
    Model model;
};

EvalSetup load_eval_setup(const CliOptions& opts) {
    if (opts.checkpoint_path.empty()) throw ConfigError("missing --checkpoint");
    LoadedCheckpoint lc = load_checkpoint(opts.checkpoint_path);
    EvalSetup setup{lc.cfg, lc.model};
    if (!opts.config_path.empty()) {
        ExperimentConfig cli_cfg = load_config(opts.config_path);
        cli_cfg.validate();
        setup.cfg.sim = cli_cfg.sim;
        setup.cfg.stop = cli_cfg.stop;
        setup.cfg.exec = cli_cfg.exec;
        setup.cfg.output = cli_cfg.output;
    }
    return setup;
}

// Execute-everything policy sized to the model horizon.
ExecPolicy full_exec(std::size_t horizon) {
    ExecPolicy exec;
    exec.kind = ExecKind::full;
    exec.h_long = exec.h_max = static_cast<int>(horizon);
    exec.h_short = exec.h_min = 1;
    exec.tau = exec.tau_base = static_cast<int>(horizon);
    return exec;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0;
    const double m = mean_of(xs);
    double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

void write_json(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

void emit_episode_rows(MetricsWriter& mw, const std::vector<EpisodeOutcome>& eps,
                       bool decision_rows) {
    for (const auto& ep : eps) {
        std::vector<double> ks;
        ks.reserve(ep.decisions.size());
        for (const auto& d : ep.decisions) ks.push_back(d.k_star);
        MetricsRow row;
        row.kind = "episode";
        row.tier = ep.tier;
        row.seed = static_cast<long long>(ep.seed);
        row.success = ep.success ? 1 : 0;
        row.k_star = mean_of(ks);
        row.step = ep.steps_used;
        mw.write(row);
        if (decision_rows) {
            long long idx = 0;
            for (const auto& d : ep.decisions) {
                MetricsRow dr;
                dr.kind = "decision";
                dr.step = idx++;
                dr.tier = ep.tier;
                dr.seed = static_cast<long long>(ep.seed);
                dr.k_star = d.k_star;
                dr.exec_horizon = d.exec_horizon;
                mw.write(dr);
            }
        }
    }
}

}  // namespace

int run_cli(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

std::vector<DemoSample> obtain_demos(const ExperimentConfig& cfg) {
    const int horizon = static_cast<int>(cfg.head.horizon);
    if (!cfg.sim.demo_cache.empty() && fs::exists(cfg.sim.demo_cache)) {
        int h = 0;
        auto demos = load_demos(cfg.sim.demo_cache, &h);
        if (h != horizon) {
            throw ConfigError("demo cache horizon " + std::to_string(h) +
                              " does not match head.horizon " + std::to_string(horizon));
        }
        return demos;
    }
    auto demos = collect_demos(cfg.sim.tiers, cfg.sim.demo_episodes, horizon,
                               cfg.sim.demo_seed, cfg.sim.demo_stride);
    if (!cfg.sim.demo_cache.empty()) save_demos(cfg.sim.demo_cache, horizon, demos);
    return demos;
}

CellStats eval_cell(const Model& model, const StopPolicy& stop, const ExecPolicy& exec,
                    const std::vector<int>& tiers, int n_seeds, uint64_t seed_base,
                    const SimSection& sim, std::vector<EpisodeOutcome>* episodes_out) {
    struct Job {
        int tier;
        uint64_t seed;
        int cap;
    };
    std::vector<Job> jobs;
    jobs.reserve(tiers.size() * static_cast<std::size_t>(n_seeds));
    for (int t : tiers) {
        for (int i = 0; i < n_seeds; ++i) {
            jobs.push_back({t, seed_base + static_cast<uint64_t>(i), sim.cap(t)});
        }
    }
    std::vector<EpisodeOutcome> outcomes(jobs.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        try {
            outcomes[j] = rollout(model, stop, exec, jobs[j].tier, jobs[j].seed, jobs[j].cap);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    CellStats st;
    std::vector<double> ks, hexecs, steps;
    for (const auto& ep : outcomes) {
        ++st.episodes;
        st.successes += ep.success ? 1 : 0;
        steps.push_back(ep.steps_used);
        for (const auto& d : ep.decisions) {
            ks.push_back(d.k_star);
            hexecs.push_back(d.exec_horizon);
            ++st.exit_counts[d.k_star];
        }
    }
    st.success_rate = st.episodes ? static_cast<double>(st.successes) / st.episodes : 0;
    st.mean_steps = mean_of(steps);
    st.mean_k = mean_of(ks);
    st.std_k = std_of(ks);
    st.mean_hexec = mean_of(hexecs);
    if (episodes_out) *episodes_out = std::move(outcomes);
    return st;
}

int cmd_train(const CliOptions& opts) {
    ExperimentConfig cfg;
    Model model;
    AdamWState opt;
    Rng rng;
    int start_step = 0;

    if (!opts.checkpoint_path.empty()) {
        LoadedCheckpoint lc = load_checkpoint(opts.checkpoint_path);
        cfg = lc.cfg;
        if (!opts.config_path.empty()) {
            // Resume: the model/dataset description stays pinned to the
            // checkpoint; only the step target may be extended.
            ExperimentConfig cli_cfg = load_config(opts.config_path);
            cfg.train.steps = cli_cfg.train.steps;
        }
        model = lc.model;
        opt = lc.opt;
        rng = lc.rng;
        start_step = static_cast<int>(lc.train_step);
    } else {
        cfg = require_config(opts);
        if (opts.seed) cfg.train.seed = *opts.seed;
        Rng init_rng(seed_mix(cfg.train.seed, kInitStream));
        model = Model::build(cfg.encoder, cfg.head, init_rng);
        opt.init(model.params);
        rng = Rng(seed_mix(cfg.train.seed, kTrainStream));
    }

    const std::string out_dir = ensure_out_dir(opts, cfg);
    auto demos = obtain_demos(cfg);
    if (!opts.demos_csv.empty()) export_demos_csv(opts.demos_csv, demos);
    std::cout << "dataset: " << demos.size() << " samples, params: "
              << model.params.total_elems() << " elems\n";

    const std::string run_id = "train-s" + std::to_string(cfg.train.seed);
    MetricsWriter mw(out_dir + "/train_metrics.csv", run_id);

    TrainHooks hooks;
    hooks.on_step = [&](const TrainStepInfo& info) {
        MetricsRow row;
        row.kind = "train";
        row.step = info.step;
        row.loss = info.loss;
        row.wall_ms = info.wall_ms;
        mw.write(row);
        if ((info.step + 1) % 100 == 0 || info.step == 0) {
            std::cout << "step " << info.step << " loss " << info.loss << " depth " << info.depth
                      << "\n";
        }
    };
    hooks.on_checkpoint = [&](int step) {
        save_checkpoint(out_dir + "/ckpt_" + std::to_string(step) + ".ckpt", cfg, model, opt,
                        rng, step);
    };

    DepthSampler sampler = cfg.sampler;
    TrainingReport report =
        train(demos, cfg.train, sampler, model, opt, rng, start_step, hooks);

    save_checkpoint(out_dir + "/final.ckpt", cfg, model, opt, rng, cfg.train.steps);

    json summary;
    summary["run_id"] = run_id;
    summary["steps"] = cfg.train.steps;
    summary["dataset_samples"] = demos.size();
    summary["first_loss"] = report.first_loss;
    summary["final_loss"] = report.final_loss;
    summary["checkpoint"] = out_dir + "/final.ckpt";
    write_json(out_dir + "/train_summary.json", summary);
    std::cout << "final loss " << report.final_loss << ", checkpoint " << out_dir
              << "/final.ckpt\n";
    return kExitOk;
}

int cmd_sweep_depth(const CliOptions& opts) {
    EvalSetup setup = load_eval_setup(opts);
    const std::string out_dir = ensure_out_dir(opts, setup.cfg);
    const auto tiers = pick_tiers(opts, setup.cfg);
    const int n_seeds = opts.eval_seeds > 0 ? opts.eval_seeds : setup.cfg.sim.eval_seeds;
    const uint64_t base = opts.seed ? *opts.seed : setup.cfg.sim.eval_seed_base;

    MetricsWriter mw(out_dir + "/depth_sweep_metrics.csv", "sweep-depth-s" + std::to_string(base));
    std::ostringstream table;
    table << "depth,tier,episodes,successes,success_rate,mean_steps,mean_k,status\n";
    json summary;
    summary["depths"] = json::array();

    for (int r : opts.depths) {
        if (r < 1 || r > static_cast<int>(setup.model.hcfg.max_iters)) {
            std::cerr << "warning: depth " << r << " outside [1, " << setup.model.hcfg.max_iters
                      << "], skipped\n";
            table << r << ",,,,,,,skipped\n";
            summary["depths"].push_back({{"depth", r}, {"status", "skipped"}});
            continue;
        }
        StopPolicy stop;
        stop.kind = StopKind::fixed;
        stop.fixed_r = r;
        stop.max_iters = static_cast<int>(setup.model.hcfg.max_iters);
        ExecPolicy exec = full_exec(setup.model.hcfg.horizon);
        json jr;
        jr["depth"] = r;
        jr["status"] = "ok";
        double total_succ = 0, total_eps = 0;
        for (int t : tiers) {
            std::vector<EpisodeOutcome> eps;
            CellStats st = eval_cell(setup.model, stop, exec, {t}, n_seeds, base,
                                     setup.cfg.sim, &eps);
            emit_episode_rows(mw, eps, false);
            table << r << "," << t << "," << st.episodes << "," << st.successes << ","
                  << st.success_rate << "," << st.mean_steps << "," << st.mean_k << ",ok\n";
            jr["tier" + std::to_string(t)] = st.success_rate;
            total_succ += st.successes;
            total_eps += st.episodes;
        }
        jr["success_all"] = total_eps > 0 ? total_succ / total_eps : 0;
        summary["depths"].push_back(jr);
        std::cout << "depth " << r << " success(all tiers) " << jr["success_all"] << "\n";
    }
    write_text_file(out_dir + "/depth_sweep.csv", table.str());
    write_json(out_dir + "/depth_sweep_summary.json", summary);
    return kExitOk;
}

int cmd_sweep_adaptive(const CliOptions& opts) {
    EvalSetup setup = load_eval_setup(opts);
    const std::string out_dir = ensure_out_dir(opts, setup.cfg);
    const auto tiers = pick_tiers(opts, setup.cfg);
    const int n_seeds = opts.eval_seeds > 0 ? opts.eval_seeds : setup.cfg.sim.eval_seeds;
    const uint64_t base = opts.seed ? *opts.seed : setup.cfg.sim.eval_seed_base;

    std::vector<std::string> strategies = opts.strategies;
    if (strategies.empty()) strategies = {"fixed", "pure_kl", "binary", "linear_decay"};
    std::vector<double> deltas = opts.deltas;
    if (deltas.empty()) deltas = {1e-4, 2e-4, 5e-4, 1e-3, 5e-3, 1e-2};

    MetricsWriter mw(out_dir + "/adaptive_sweep_metrics.csv",
                     "sweep-adaptive-s" + std::to_string(base));
    std::ostringstream table;
    table << "strategy,delta,episodes,success_rate,mean_k,std_k,mean_hexec\n";
    std::ostringstream exits;
    exits << "strategy,delta,k_star,count\n";
    json summary;
    summary["cells"] = json::array();

    auto run_cell = [&](const std::string& strategy, double delta, const StopPolicy& stop,
                        const ExecPolicy& exec) {
        std::vector<EpisodeOutcome> eps;
        CellStats st = eval_cell(setup.model, stop, exec, tiers, n_seeds, base, setup.cfg.sim,
                                 &eps);
        emit_episode_rows(mw, eps, false);
        table << strategy << "," << (delta > 0 ? std::to_string(delta) : std::string()) << ","
              << st.episodes << "," << st.success_rate << "," << st.mean_k << "," << st.std_k
              << "," << st.mean_hexec << "\n";
        for (const auto& [k, c] : st.exit_counts) {
            exits << strategy << "," << (delta > 0 ? std::to_string(delta) : std::string())
                  << "," << k << "," << c << "\n";
        }
        json cell;
        cell["strategy"] = strategy;
        if (delta > 0) cell["delta"] = delta;
        cell["success_rate"] = st.success_rate;
        cell["mean_k"] = st.mean_k;
        cell["std_k"] = st.std_k;
        cell["mean_hexec"] = st.mean_hexec;
        summary["cells"].push_back(cell);
        std::cout << strategy << (delta > 0 ? " delta " + std::to_string(delta) : "")
                  << ": success " << st.success_rate << " mean_k " << st.mean_k << " std_k "
                  << st.std_k << "\n";
    };

    for (const auto& strategy : strategies) {
        if (strategy == "fixed") {
            StopPolicy stop = setup.cfg.stop;
            stop.kind = StopKind::fixed;
            run_cell("fixed", 0, stop, full_exec(setup.model.hcfg.horizon));
            continue;
        }
        for (double delta : deltas) {
            StopPolicy stop = setup.cfg.stop;
            stop.kind = StopKind::pure_kl;
            stop.delta = delta;
            ExecPolicy exec = setup.cfg.exec;
            if (strategy == "pure_kl") {
                exec.kind = ExecKind::full;
            } else if (strategy == "binary") {
                exec.kind = ExecKind::binary;
            } else if (strategy == "linear_decay") {
                exec.kind = ExecKind::linear_decay;
            } else {
                throw ConfigError("unknown strategy '" + strategy +
                                  "' (fixed|pure_kl|binary|linear_decay)");
            }
            run_cell(strategy, delta, stop, exec);
        }
    }
    write_text_file(out_dir + "/adaptive_sweep.csv", table.str());
    write_text_file(out_dir + "/adaptive_exits.csv", exits.str());
    write_json(out_dir + "/adaptive_sweep_summary.json", summary);
    return kExitOk;
}

int cmd_rollout(const CliOptions& opts) {
    EvalSetup setup = load_eval_setup(opts);
    const std::string out_dir = ensure_out_dir(opts, setup.cfg);
    const auto tiers = pick_tiers(opts, setup.cfg);
    const int n_seeds = opts.eval_seeds > 0 ? opts.eval_seeds : setup.cfg.sim.eval_seeds;
    const uint64_t base = opts.seed ? *opts.seed : setup.cfg.sim.eval_seed_base;

    MetricsWriter mw(out_dir + "/rollout_metrics.csv", "rollout-s" + std::to_string(base));
    json summary;
    summary["tiers"] = json::array();
    for (int t : tiers) {
        std::vector<EpisodeOutcome> eps;
        CellStats st = eval_cell(setup.model, setup.cfg.stop, setup.cfg.exec, {t}, n_seeds,
                                 base, setup.cfg.sim, &eps);
        emit_episode_rows(mw, eps, true);
        json jt;
        jt["tier"] = t;
        jt["success_rate"] = st.success_rate;
        jt["mean_steps"] = st.mean_steps;
        jt["mean_k"] = st.mean_k;
        jt["std_k"] = st.std_k;
        jt["mean_hexec"] = st.mean_hexec;
        summary["tiers"].push_back(jt);
        std::cout << "tier " << t << ": success " << st.success_rate << " mean_k " << st.mean_k
                  << " mean_hexec " << st.mean_hexec << "\n";
    }
    write_json(out_dir + "/rollout_summary.json", summary);
    return kExitOk;
}

int cmd_sample_recurrence(const CliOptions& opts) {
    ExperimentConfig cfg = require_config(opts);
    const std::string out_dir = ensure_out_dir(opts, cfg);
    const long long draws = opts.draws;
    if (draws < 1) throw ConfigError("sample-recurrence: --draws must be >= 1");
    Rng rng(opts.seed ? *opts.seed : cfg.sampler.seed);

    std::map<int, long long> hist;
    double sum = 0, sum2 = 0, sum3 = 0;
    int mn = 0, mx = 0;
    for (long long i = 0; i < draws; ++i) {
        const int n = sample_depth(cfg.sampler, rng);
        ++hist[n];
        sum += n;
        if (i == 0) {
            mn = mx = n;
        } else {
            mn = std::min(mn, n);
            mx = std::max(mx, n);
        }
    }
    const double mean = sum / static_cast<double>(draws);
    for (const auto& [k, c] : hist) {
        sum2 += c * (k - mean) * (k - mean);
        sum3 += c * (k - mean) * (k - mean) * (k - mean);
    }
    const double var = sum2 / static_cast<double>(draws);
    const double sd = std::sqrt(var);
    const double skew = sd > 0 ? (sum3 / static_cast<double>(draws)) / (sd * sd * sd) : 0;

    std::ostringstream csv;
    csv << "depth,count\n";
    for (const auto& [k, c] : hist) csv << k << "," << c << "\n";
    write_text_file(out_dir + "/sample_recurrence.csv", csv.str());

    json summary;
    summary["draws"] = draws;
    summary["mu_rec"] = cfg.sampler.mu_rec;
    summary["sigma"] = cfg.sampler.sigma;
    summary["mean"] = mean;
    summary["std"] = sd;
    summary["min"] = mn;
    summary["max"] = mx;
    summary["skewness"] = skew;
    write_json(out_dir + "/sample_recurrence_summary.json", summary);

    std::cout << "depth sampler: mean " << mean << " std " << sd << " min " << mn << " max "
              << mx << " skewness " << skew << " (expected mean " << cfg.sampler.mu_rec + 1
              << " at sigma 0.5)\n";
    return kExitOk;
}

int cmd_calibrate_delta(const CliOptions& opts) {
    EvalSetup setup = load_eval_setup(opts);
    const std::string out_dir = ensure_out_dir(opts, setup.cfg);
    if (opts.target_iters <= 0) {
        throw ConfigError("calibrate-delta: --target-iters must be positive");
    }
    const auto tiers = pick_tiers(opts, setup.cfg);
    const int n_seeds = opts.eval_seeds > 0 ? opts.eval_seeds : setup.cfg.sim.eval_seeds;
    const uint64_t base = opts.seed ? *opts.seed : setup.cfg.sim.eval_seed_base;

    std::vector<ContextBundle> contexts;
    for (int t : tiers) {
        for (int i = 0; i < n_seeds; ++i) {
            SimState st = reset(t, base + static_cast<uint64_t>(i));
            contexts.push_back(setup.model.encode_observation(st.observation(), st.proprio()));
        }
    }
    CalibrationResult res = calibrate_delta(contexts, setup.model.head, opts.target_iters,
                                            setup.cfg.stop, base);
    json summary;
    summary["target_mean_iters"] = opts.target_iters;
    summary["delta"] = res.delta;
    summary["achieved_mean_iters"] = res.achieved_mean;
    write_json(out_dir + "/calibrate_delta.json", summary);
    std::cout << "delta " << res.delta << " achieves mean k* " << res.achieved_mean
              << " (target " << opts.target_iters << ")\n";
    return kExitOk;
}

}  // namespace rdvla
