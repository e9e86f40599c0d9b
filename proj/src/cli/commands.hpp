#pragma once

#include <filesystem>

#include "cli/config.hpp"

namespace sdlab::cli {

struct RunOptions {
    std::filesystem::path out_root = "out";
    int jobs = 1;
};

// Each command writes out_root/<name>/<command>/{results.csv,
// resolved-config.json} plus command-specific extras (images/ for grid tasks,
// weights for train, timing.json + summary.csv for the ablation). All throw:
// ConfigError for bad configuration, DivergenceError when an optimisation blew
// up, IoError for filesystem trouble; the binary maps these to exit codes.

void run_edit(const ExperimentConfig& config, const RunOptions& options);
void run_ablation(const ExperimentConfig& config, const RunOptions& options);
void run_inversion(const ExperimentConfig& config, const RunOptions& options);
void run_posterior_sweep(const ExperimentConfig& config, const RunOptions& options);
void run_train(const ExperimentConfig& config, const RunOptions& options);

}  // namespace sdlab::cli
