#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "sdlab/errors.hpp"
#include "sdlab/metrics.hpp"

using namespace sdlab;
using namespace sdlab::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = "tmp-test-cli";

struct TmpDir {
    TmpDir() { fs::create_directories(kTmp); }
    ~TmpDir() { fs::remove_all(kTmp); }
};

fs::path write_file(const std::string& name, const std::string& body) {
    fs::create_directories(kTmp);
    fs::path path = kTmp / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::istringstream in(slurp(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.empty() || line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

TEST_CASE("a minimal config resolves to the documented defaults") {
    TmpDir guard;
    fs::path path = write_file("minimal.json", "{\"schema\": 1}\n");
    ExperimentConfig cfg = load_config(path);

    CHECK(cfg.name == "experiment");
    CHECK(cfg.seed == 0);
    CHECK(cfg.world.type == "vector");
    CHECK(cfg.world.modes == std::vector<std::vector<double>>{{-2.0, 0.0}, {2.0, 0.0}});
    CHECK(cfg.world.sigma == 0.3);
    CHECK(cfg.backend.type == "analytic");
    REQUIRE(cfg.edit.methods.size() == 1);
    CHECK(cfg.edit.methods[0] == DistillMethod::ids);
    CHECK(cfg.edit.omega == 7.5);
    CHECK(cfg.edit.steps == 200);
    CHECK(cfg.edit.lr == 0.05);
    CHECK(cfg.edit.t_min == 0.05);
    CHECK(cfg.edit.t_max == 0.95);
    CHECK(cfg.edit.seeds == 1);
    CHECK(cfg.posterior.omega == 0.0);
    CHECK(cfg.train.epochs == 200);

    // resolving and reloading the resolved form is a fixed point
    fs::path resolved = write_file("resolved.json", resolved_config_json(cfg).dump(2) + "\n");
    ExperimentConfig again = load_config(resolved);
    CHECK(resolved_config_json(again).dump(2) == resolved_config_json(cfg).dump(2));
}

TEST_CASE("config validation rejects what it cannot interpret") {
    TmpDir guard;
    CHECK_THROWS_AS(load_config(kTmp / "missing.json"), IoError);
    CHECK_THROWS_AS(load_config(write_file("broken.json", "{nope")), ConfigError);
    CHECK_THROWS_AS(load_config(write_file("noschema.json", "{}")), ConfigError);
    CHECK_THROWS_AS(load_config(write_file("schema2.json", "{\"schema\": 2}")), ConfigError);
    CHECK_THROWS_AS(load_config(write_file("stray.json", "{\"schema\": 1, \"extra\": 3}")),
                    ConfigError);
    CHECK_THROWS_AS(
        load_config(write_file("nested.json",
                               "{\"schema\": 1, \"edit\": {\"stepz\": 10}}")),
        ConfigError);
    CHECK_THROWS_AS(
        load_config(write_file("badmethod.json",
                               "{\"schema\": 1, \"edit\": {\"methods\": [\"pds\"]}}")),
        ConfigError);
    CHECK_THROWS_AS(
        load_config(write_file("badworld.json",
                               "{\"schema\": 1, \"world\": {\"type\": \"audio\"}}")),
        ConfigError);
}

TEST_CASE("edit command: zero steps leaves the source untouched") {
    TmpDir guard;
    ExperimentConfig cfg;
    cfg.name = "t-edit";
    cfg.edit.methods = {DistillMethod::dds};
    cfg.edit.steps = 0;
    cfg.edit.seeds = 2;
    cfg.edit.source_label = 0;
    cfg.edit.target_label = 1;
    RunOptions options;
    options.out_root = kTmp / "out";
    run_edit(cfg, options);

    fs::path dir = options.out_root / "t-edit" / "edit";
    CHECK(fs::exists(dir / "resolved-config.json"));
    auto rows = read_csv(dir / "results.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"method", "seed", "mse_source", "psnr_source",
                                              "identity_residual", "dist_target_mode",
                                              "dist_source_mode"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
        REQUIRE(rows[r].size() == 7);
        CHECK(rows[r][0] == "dds");
        CHECK(rows[r][1] == std::to_string(r - 1));
        CHECK(rows[r][2] == "0");    // edited == source
        CHECK(rows[r][3] == "inf");  // so the comparison is exact
        // an unedited sample keeps its full offset: residual == mode distance
        double residual = std::strtod(rows[r][4].c_str(), nullptr);
        CHECK(residual == doctest::Approx(4.0).epsilon(1e-12));
        // the source sits near label 0, which is 4 away from label 1
        double to_target = std::strtod(rows[r][5].c_str(), nullptr);
        double to_source = std::strtod(rows[r][6].c_str(), nullptr);
        CHECK(to_target > 2.0);
        CHECK(to_source < 2.0);
    }
    // the two seeds drew different sources
    CHECK(rows[1][5] != rows[2][5]);
}

TEST_CASE("edit command reruns are byte-identical and seed-sensitive") {
    TmpDir guard;
    ExperimentConfig cfg;
    cfg.name = "t-det";
    cfg.edit.methods = {DistillMethod::ids, DistillMethod::dds};
    cfg.edit.steps = 5;
    cfg.edit.seeds = 2;
    cfg.edit.target_label = 1;
    RunOptions options;

    options.out_root = kTmp / "a";
    run_edit(cfg, options);
    options.out_root = kTmp / "b";
    run_edit(cfg, options);
    options.out_root = kTmp / "c";
    options.jobs = 4;  // worker count must not leak into the results
    run_edit(cfg, options);

    std::string first = slurp(kTmp / "a" / "t-det" / "edit" / "results.csv");
    CHECK(first == slurp(kTmp / "b" / "t-det" / "edit" / "results.csv"));
    CHECK(first == slurp(kTmp / "c" / "t-det" / "edit" / "results.csv"));
    CHECK(slurp(kTmp / "a" / "t-det" / "edit" / "resolved-config.json") ==
          slurp(kTmp / "b" / "t-det" / "edit" / "resolved-config.json"));

    cfg.seed = 99;
    options.out_root = kTmp / "d";
    options.jobs = 1;
    run_edit(cfg, options);
    CHECK(first != slurp(kTmp / "d" / "t-det" / "edit" / "results.csv"));
}

TEST_CASE("ablation: the zero-iteration cells reproduce the baseline exactly") {
    TmpDir guard;
    ExperimentConfig cfg;
    cfg.name = "t-ab";
    cfg.edit.target_label = 1;
    cfg.ablation.lambdas = {0.5};
    cfg.ablation.seeds = 1;
    RunOptions options;
    options.out_root = kTmp / "out";
    run_ablation(cfg, options);

    fs::path dir = options.out_root / "t-ab" / "ablate";
    auto rows = read_csv(dir / "results.csv");
    // header + 4 dds cells + (1 lambda x 3 iter counts x 4 cells) for ids
    REQUIRE(rows.size() == 1 + 4 + 12);
    CHECK(rows[0][0] == "method");
    CHECK(rows[0][5] == "seed");

    auto cell_key = [](const std::vector<std::string>& row) {
        return row[3] + "/" + row[4] + "/" + row[5];  // steps, range, seed
    };
    // every dds row must have a bitwise-equal ids twin with n_iters 0
    for (std::size_t r = 1; r <= 4; ++r) {
        REQUIRE(rows[r][0] == "dds");
        bool found = false;
        for (std::size_t q = 5; q < rows.size(); ++q) {
            if (rows[q][0] != "ids" || rows[q][2] != "0") continue;
            if (cell_key(rows[q]) != cell_key(rows[r])) continue;
            found = true;
            for (std::size_t col = 6; col < rows[r].size(); ++col)
                CHECK(rows[q][col] == rows[r][col]);
        }
        CHECK(found);
    }

    auto summary = read_csv(dir / "summary.csv");
    CHECK(summary.size() == 1 + 16);  // one group per cell at a single seed

    // timing stays out of the deterministic outputs but must be well-formed
    std::ifstream timing(dir / "timing.json");
    REQUIRE(timing.good());
    nlohmann::json doc = nlohmann::json::parse(timing);
    CHECK(doc["cells"].size() == 16);
}

TEST_CASE("inversion command: replaying zero steps reconstructs exactly") {
    TmpDir guard;
    ExperimentConfig cfg;
    cfg.name = "t-inv";
    cfg.edit.steps = 0;
    cfg.edit.target_label = 1;
    cfg.inversion.seeds = 2;
    RunOptions options;
    options.out_root = kTmp / "out";
    run_inversion(cfg, options);

    auto rows = read_csv(options.out_root / "t-inv" / "invert" / "results.csv");
    REQUIRE(rows.size() == 5);  // header + 2 methods x 2 seeds
    CHECK(rows[0] == std::vector<std::string>{"method", "seed", "reconstruction_mse",
                                              "mse_source", "dist_target_mode"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
        CHECK(rows[r][0] == (r <= 2 ? "dds" : "ids"));
        CHECK(rows[r][2] == "0");
        CHECK(rows[r][3] == "0");
    }
}

TEST_CASE("posterior sweep: the zero-noise row is exact") {
    TmpDir guard;
    ExperimentConfig cfg;
    cfg.name = "t-sweep";
    cfg.posterior.t_values = {0.0, 0.5};
    cfg.posterior.seeds = 2;
    RunOptions options;
    options.out_root = kTmp / "out";
    run_posterior_sweep(cfg, options);

    auto rows = read_csv(options.out_root / "t-sweep" / "sweep-posterior" / "results.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"seed", "t", "dist_pre", "dist_post_latent",
                                              "dist_post_noise"});
    // rows arrive seed-major in the configured t order
    CHECK(rows[1][0] == "0");
    CHECK(rows[1][1] == "0");
    CHECK(rows[3][0] == "1");
    for (std::size_t r : {std::size_t{1}, std::size_t{3}}) {
        CHECK(rows[r][2] == "0");  // identity diffusion, exact estimate
        CHECK(rows[r][3] == rows[r][2]);
        CHECK(rows[r][4] == rows[r][2]);
    }
    for (std::size_t r : {std::size_t{2}, std::size_t{4}}) {
        CHECK(rows[r][1] == "0.5");
        for (int col : {2, 3, 4})
            CHECK(std::isfinite(std::strtod(rows[r][static_cast<std::size_t>(col)].c_str(),
                                            nullptr)));
    }
}

TEST_CASE("train command: zero epochs writes the initial weights unchanged") {
    TmpDir guard;
    ExperimentConfig cfg;
    cfg.name = "t-train";
    cfg.train.per_label = 2;
    cfg.train.hidden = {8};
    cfg.train.epochs = 0;
    RunOptions options;
    options.out_root = kTmp / "out";
    run_train(cfg, options);

    fs::path dir = options.out_root / "t-train" / "train";
    CHECK(slurp(dir / "init-weights.json") == slurp(dir / "weights.json"));
    auto rows = read_csv(dir / "results.csv");
    REQUIRE(rows.size() == 1);  // header only, no epochs ran
    CHECK(rows[0] == std::vector<std::string>{"epoch", "mean_loss"});
}

#ifdef SDLAB_BIN

namespace {

int run_cli(const std::string& args) {
    std::string command = std::string(SDLAB_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(command.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("command line wiring: exit codes and rerun determinism") {
    TmpDir guard;
    fs::path cfg = write_file("cli.json",
                              "{\"schema\": 1, \"name\": \"cli\", "
                              "\"edit\": {\"methods\": [\"ids\"], \"steps\": 4, "
                              "\"seeds\": 2, \"target_label\": 1}}\n");
    std::string base = "edit --config " + cfg.string();

    CHECK(run_cli(base + " --out " + (kTmp / "x").string()) == 0);
    CHECK(run_cli(base + " --out " + (kTmp / "y").string()) == 0);
    std::string first = slurp(kTmp / "x" / "cli" / "edit" / "results.csv");
    CHECK(first == slurp(kTmp / "y" / "cli" / "edit" / "results.csv"));
    CHECK(first.find("\r") == std::string::npos);  // LF line endings only

    // a seed override changes the draws
    CHECK(run_cli(base + " --out " + (kTmp / "z").string() + " --seed 7") == 0);
    CHECK(first != slurp(kTmp / "z" / "cli" / "edit" / "results.csv"));

    // config problems are reported as exit code 2, missing files as 4
    fs::path bad = write_file("bad.json", "{\"schema\": 1, \"oops\": true}\n");
    CHECK(run_cli("edit --config " + bad.string()) == 2);
    CHECK(run_cli("edit --config " + (kTmp / "absent.json").string()) == 4);
    CHECK(run_cli("edit") == 2);                    // --config is required
    CHECK(run_cli("transmogrify --config x") == 2); // unknown verb
}

#endif  // SDLAB_BIN
