#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdlab/distill.hpp"
#include "sdlab/fpr.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab::cli {

// Experiment configuration, JSON schema 1. Every field except "schema" has a
// default, so a minimal config is {"schema": 1}. Unknown keys anywhere are
// errors; all violations surface as ConfigError with a config-path anchor.

struct WorldConfig {
    std::string type = "vector";  // "vector" | "shape"
    // vector worlds
    std::vector<std::vector<double>> modes = {{-2.0, 0.0}, {2.0, 0.0}};
    double sigma = 0.3;
    // shape worlds
    int per_label = 8;
    int height = 16;
    int width = 16;
    int smoothing_passes = 0;
    std::uint64_t dataset_seed = 0;
    double component_sigma = 0.25;

    NoiseSchedule schedule;
};

struct BackendConfig {
    std::string type = "analytic";  // "analytic" | "mlp"
    std::string weights;            // weights JSON path, mlp only
};

struct EditSection {
    std::vector<DistillMethod> methods = {DistillMethod::ids};
    double omega = 7.5;
    int steps = 200;
    double lr = 0.05;  // default 0.05 for vector worlds, 0.1 for grids
    double t_min = 0.05;
    double t_max = 0.95;
    int seeds = 1;
    int source_label = 0;
    int target_label = 0;  // defaults to a no-op edit; set explicitly to move labels
    int snapshot_every = 0;
    FprConfig fpr;
};

struct AblationSection {
    std::vector<double> lambdas = {0.5, 1.0, 2.0};
    int seeds = 5;
};

struct InversionSection {
    int seeds = 20;
};

struct PosteriorSection {
    std::vector<double> t_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int seeds = 5;
    double omega = 0.0;
    FprConfig fpr;  // omega follows the section's omega unless set explicitly
};

struct TrainSection {
    int per_label = 200;
    std::uint64_t data_seed = 1;
    std::vector<int> hidden = {32, 32};
    int epochs = 200;
    double learning_rate = 1e-3;
    double cond_drop_prob = 0.1;
    std::uint64_t init_seed = 7;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    WorldConfig world;
    BackendConfig backend;
    EditSection edit;
    AblationSection ablation;
    InversionSection inversion;
    PosteriorSection posterior;
    TrainSection train;
};

// Parses and validates the file; throws ConfigError with "<file>:<line>" for
// parse errors and "<json path>" anchors for schema violations.
ExperimentConfig load_config(const std::filesystem::path& path);

// The fully materialised configuration (all defaults filled in), for the
// resolved-config.json echo every command writes next to its results.
nlohmann::ordered_json resolved_config_json(const ExperimentConfig& config);

}  // namespace sdlab::cli
