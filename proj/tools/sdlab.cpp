#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "sdlab/errors.hpp"

namespace {

struct Args {
    std::string config_path;
    std::string out_root = "out";
    int jobs = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_options(CLI::App* cmd, Args& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", args.out_root, "output root directory");
    cmd->add_option("--jobs", args.jobs, "worker threads for sweep cells")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", args.seed, "override the config's seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"score-distillation editing laboratory"};
    app.require_subcommand(1);
    Args args;

    CLI::App* edit_cmd = app.add_subcommand("edit", "run the configured edit methods");
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "lambda/iteration/step-count sweep");
    CLI::App* invert_cmd = app.add_subcommand("invert", "edit, then replay the noise backwards");
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep-posterior", "posterior-mean distance across noise levels");
    CLI::App* train_cmd = app.add_subcommand("train", "train the MLP denoiser");
    for (CLI::App* cmd : {edit_cmd, ablate_cmd, invert_cmd, sweep_cmd, train_cmd})
        add_common_options(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        sdlab::cli::ExperimentConfig config = sdlab::cli::load_config(args.config_path);
        if (args.seed_set) config.seed = args.seed;
        sdlab::cli::RunOptions options;
        options.out_root = args.out_root;
        options.jobs = args.jobs;
        if (edit_cmd->parsed()) sdlab::cli::run_edit(config, options);
        if (ablate_cmd->parsed()) sdlab::cli::run_ablation(config, options);
        if (invert_cmd->parsed()) sdlab::cli::run_inversion(config, options);
        if (sweep_cmd->parsed()) sdlab::cli::run_posterior_sweep(config, options);
        if (train_cmd->parsed()) sdlab::cli::run_train(config, options);
    } catch (const sdlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sdlab::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const sdlab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
