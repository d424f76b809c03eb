// Command-line front end: train, sweep-depth, sweep-adaptive, rollout,
// sample-recurrence, calibrate-delta. Exit codes: 0 ok, 2 config error,
// 3 runtime/NaN error, 4 I/O error.

#include "CLI11.hpp"
#include "rdvla/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"recurrent-depth action head on a tiered 2D manipulation sim"};
    app.require_subcommand(1);

    rdvla::CliOptions opts;
    uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub, bool needs_ckpt) {
        sub->add_option("--config", opts.config_path, "experiment config file");
        auto* c = sub->add_option("--checkpoint", opts.checkpoint_path, "checkpoint file");
        if (needs_ckpt) c->required();
        sub->add_option("--out", opts.out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed_value, "seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--tiers", opts.tiers, "tier list")->delimiter(',');
    };

    auto* train = app.add_subcommand("train", "collect demos and train");
    add_common(train, false);
    train->add_option("--demos-csv", opts.demos_csv, "export the demo dataset as CSV");

    auto* sweep_depth = app.add_subcommand("sweep-depth", "fixed-depth success sweep");
    add_common(sweep_depth, true);
    sweep_depth->add_option("--depths", opts.depths, "depth list")->delimiter(',');
    sweep_depth->add_option("--seeds", opts.eval_seeds, "episodes per (depth, tier)");

    auto* sweep_adaptive =
        app.add_subcommand("sweep-adaptive", "stopping/execution strategy ablation");
    add_common(sweep_adaptive, true);
    sweep_adaptive->add_option("--strategy", opts.strategies, "strategy list")->delimiter(',');
    sweep_adaptive->add_option("--delta", opts.deltas, "delta grid")->delimiter(',');
    sweep_adaptive->add_option("--seeds", opts.eval_seeds, "episodes per (cell, tier)");

    auto* roll = app.add_subcommand("rollout", "closed-loop rollouts with the config policies");
    add_common(roll, true);
    roll->add_option("--seeds", opts.eval_seeds, "episodes per tier");

    auto* sample = app.add_subcommand("sample-recurrence", "depth-sampler statistics");
    add_common(sample, false);
    sample->add_option("--draws", opts.draws, "number of draws");

    auto* calib = app.add_subcommand("calibrate-delta", "find delta for a target mean k*");
    add_common(calib, true);
    calib->add_option("--target-iters", opts.target_iters, "target mean k*")->required();
    calib->add_option("--seeds", opts.eval_seeds, "validation contexts per tier");

    CLI11_PARSE(app, argc, argv);
    if (seed_given) opts.seed = seed_value;

    return rdvla::run_cli([&]() -> int {
        if (train->parsed()) return rdvla::cmd_train(opts);
        if (sweep_depth->parsed()) return rdvla::cmd_sweep_depth(opts);
        if (sweep_adaptive->parsed()) return rdvla::cmd_sweep_adaptive(opts);
        if (roll->parsed()) return rdvla::cmd_rollout(opts);
        if (sample->parsed()) return rdvla::cmd_sample_recurrence(opts);
        if (calib->parsed()) return rdvla::cmd_calibrate_delta(opts);
        return rdvla::kExitConfig;
    });
}
