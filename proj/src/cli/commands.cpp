#include "cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "sdlab/diffusion.hpp"
#include "sdlab/errors.hpp"
#include "sdlab/metrics.hpp"
#include "sdlab/tasks.hpp"
#include "sdlab/tweedie.hpp"

namespace sdlab::cli {

namespace {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// World assembly

struct World {
    NoiseSchedule schedule;
    bool grid = false;
    int labels = 0;
    std::vector<int> shape;

    std::optional<VectorWorld> vector;
    std::optional<ShapeImageDataset> shapes;
    std::optional<GaussianMixtureBackend> shape_backend;
    std::optional<MlpDenoiserBackend> mlp;
    const ScoreBackend* backend = nullptr;  // null only when need_backend was false
};

World build_world(const ExperimentConfig& config, bool need_backend) {
    World world;
    world.schedule = config.world.schedule;
    if (config.world.type == "vector") {
        VectorWorldSpec spec;
        for (const auto& mode : config.world.modes)
            spec.labels.push_back({mode, config.world.sigma});
        spec.schedule = config.world.schedule;
        world.vector.emplace(spec);
        world.labels = world.vector->num_labels();
        world.shape = {world.vector->dim()};
        world.backend = &world.vector->backend();
    } else {
        ShapeDatasetSpec spec;
        spec.per_label = config.world.per_label;
        spec.height = config.world.height;
        spec.width = config.world.width;
        spec.smoothing_passes = config.world.smoothing_passes;
        spec.seed = config.world.dataset_seed;
        world.shapes = make_shape_dataset(spec);
        world.grid = true;
        world.labels = 2;
        world.shape = {config.world.height, config.world.width};
        world.shape_backend.emplace(
            make_shape_backend(*world.shapes, config.world.component_sigma,
                               config.world.schedule));
        world.backend = &*world.shape_backend;
    }

    if (config.backend.type == "mlp" && need_backend) {
        std::ifstream file(config.backend.weights, std::ios::binary);
        if (!file) throw IoError("cannot read weights file " + config.backend.weights);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(file);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("weights file " + config.backend.weights + ": " +
                            std::string(e.what()));
        }
        world.mlp.emplace(MlpDenoiserBackend::from_json(doc));
        if (world.mlp->latent_shape() != world.shape || world.mlp->num_labels() != world.labels)
            throw ConfigError("backend.weights: trained shape or label count does not match "
                              "the configured world");
        world.backend = &*world.mlp;
    }
    return world;
}

// Source latent for one trial. Vector worlds draw around the label's mode;
// shape worlds cycle deterministically through the dataset images of the
// label, consuming no randomness.
Latent pick_source(const World& world, int label, int trial, Rng rng) {
    if (world.vector) return world.vector->sample(label, rng);
    std::vector<const Latent*> candidates;
    for (const ShapeSample& sample : world.shapes->samples) {
        if (sample.cond.label_id() == label) candidates.push_back(&sample.image);
    }
    if (candidates.empty()) throw DataError("no dataset images with the requested label");
    return *candidates[static_cast<std::size_t>(trial) % candidates.size()];
}

// Distance from a latent to the label's clean anchor: mode distance for
// vector worlds, distance to the nearest exemplar image for grids.
double anchor_distance(const World& world, const Latent& z, int label) {
    if (world.vector) return norm(sub(z, world.vector->mode(label)));
    double best = std::numeric_limits<double>::infinity();
    for (const ShapeSample& sample : world.shapes->samples) {
        if (sample.cond.label_id() == label) best = std::min(best, norm(sub(z, sample.image)));
    }
    return best;
}

// ---------------------------------------------------------------------------
// CSV plumbing

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    auto write_row = [&file](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) file << ',';
            file << cells[i];
        }
        file << '\n';
    };
    write_row(table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw Error("csv row width does not match the header");
        write_row(row);
    }
    if (!file.good()) throw IoError("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const ordered_json& doc) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file << doc.dump(2) << '\n';
    if (!file.good()) throw IoError("failed writing " + path.string());
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& config, const RunOptions& options,
                                      const char* command, bool with_images) {
    const std::filesystem::path dir = options.out_root / config.name / command;
    std::error_code ec;
    std::filesystem::create_directories(with_images ? dir / "images" : dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_json_file(dir / "resolved-config.json", resolved_config_json(config));
    return dir;
}

// ---------------------------------------------------------------------------
// Parallel cell execution: worker threads pull cell indices from a shared
// counter; outputs are buffered per cell by the callers, so row order never
// depends on completion order. The lowest-index failure wins.

void run_cells(int jobs, int count, const std::function<void(int)>& cell_fn) {
    if (count <= 0) return;
    const int workers = std::max(1, std::min(jobs, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) cell_fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    auto body = [&]() {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                cell_fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// Shared metric columns

std::vector<std::string> metric_header(const World& world) {
    if (!world.grid)
        return {"mse_source", "psnr_source", "identity_residual", "dist_target_mode",
                "dist_source_mode"};
    return {"mse_source", "psnr_source", "ssim",          "background_psnr",
            "background_fraction", "mask_iou", "identity_residual", "dist_target_mode"};
}

struct EditMetrics {
    std::vector<std::string> cells;
    double identity = std::numeric_limits<double>::quiet_NaN();
    double dist_target = std::numeric_limits<double>::quiet_NaN();
};

BinaryMask intensity_mask(const Latent& image) {
    BinaryMask mask;
    mask.shape = image.shape;
    mask.keep.reserve(image.data.size());
    for (double v : image.data) mask.keep.push_back(v > 0.5 ? 1 : 0);
    return mask;
}

EditMetrics compute_edit_metrics(const World& world, const EditSection& edit_cfg,
                                 const Latent& source, const Latent& edited) {
    EditMetrics out;
    const double err = mse(edited, source);
    double range = 0.0;
    if (!source.data.empty()) {
        const auto [lo, hi] = std::minmax_element(source.data.begin(), source.data.end());
        range = *hi - *lo;
    }
    const std::string psnr_cell =
        range > 0.0 ? psnr(edited, source, range).to_csv() : PsnrValue::undefined().to_csv();

    if (!world.vector) {
        out.dist_target = anchor_distance(world, edited, edit_cfg.target_label);
        std::string centroid_cell = "undefined";
        try {
            out.identity = norm(sub(intensity_centroid(edited), intensity_centroid(source)));
            centroid_cell = format_double(out.identity);
        } catch (const DomainError&) {
            out.identity = std::numeric_limits<double>::quiet_NaN();
        }
        std::string bg_cell = "undefined";
        double fraction = 0.0;
        if (range > 0.0) {
            const BackgroundPsnrResult bg =
                background_psnr(source, edited, default_background_window(source.shape[0],
                                                                          source.shape[1]),
                                ThresholdMode::mean, range);
            bg_cell = bg.psnr.to_csv();
            fraction = static_cast<double>(bg.mask.count_kept()) /
                       static_cast<double>(source.data.size());
        }
        out.cells = {format_double(err),
                     psnr_cell,
                     format_double(ssim(source, edited)),
                     bg_cell,
                     format_double(fraction),
                     format_double(iou(intensity_mask(source), intensity_mask(edited))),
                     centroid_cell,
                     format_double(out.dist_target)};
        return out;
    }

    const Latent& mode_src = world.vector->mode(edit_cfg.source_label);
    const Latent& mode_trg = world.vector->mode(edit_cfg.target_label);
    out.identity = identity_residual(edited, mode_trg, source, mode_src);
    out.dist_target = norm(sub(edited, mode_trg));
    out.cells = {format_double(err), psnr_cell, format_double(out.identity),
                 format_double(out.dist_target), format_double(norm(sub(edited, mode_src)))};
    return out;
}

DistillConfig make_distill_config(const EditSection& edit_cfg, DistillMethod method,
                                  std::uint64_t seed) {
    DistillConfig dc;
    dc.method = method;
    dc.omega = edit_cfg.omega;
    dc.steps = edit_cfg.steps;
    dc.lr = edit_cfg.lr;
    dc.t_min = edit_cfg.t_min;
    dc.t_max = edit_cfg.t_max;
    dc.fpr = edit_cfg.fpr;
    dc.seed = seed;
    return dc;
}

std::string image_name(const std::string& method, int trial, const char* role) {
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "%s-seed%03d-%s.pgm", method.c_str(), trial, role);
    return buffer;
}

}  // namespace

// ---------------------------------------------------------------------------

void run_edit(const ExperimentConfig& config, const RunOptions& options) {
    const World world = build_world(config, true);
    const std::filesystem::path dir = prepare_out_dir(config, options, "edit", world.grid);
    const EditSection& e = config.edit;

    const int n_cells = static_cast<int>(e.methods.size()) * e.seeds;
    std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(n_cells));
    const Rng master(config.seed);

    run_cells(options.jobs, n_cells, [&](int ci) {
        const int mi = ci / e.seeds;
        const int si = ci % e.seeds;
        const DistillMethod method = e.methods[static_cast<std::size_t>(mi)];
        // Trials with the same seed index share source and noise draws across
        // methods, so per-seed comparisons are paired.
        const Rng trial = master.derive(static_cast<std::uint64_t>(si));
        const Latent source = pick_source(world, e.source_label, si, trial.derive(0));
        const DistillConfig dc = make_distill_config(e, method, trial.derive(1).seed());
        const EditTask task{source, Condition::label(e.source_label),
                            Condition::label(e.target_label)};
        EditResult result;
        try {
            result = edit(*world.backend, task, dc, world.schedule, e.snapshot_every);
        } catch (const DivergenceError& ex) {
            throw DivergenceError("task " + to_string(method) + "/seed" + std::to_string(si) +
                                  ": " + ex.what());
        }
        EditMetrics metrics = compute_edit_metrics(world, e, source, result.edited);
        std::vector<std::string> row = {to_string(method), std::to_string(si)};
        row.insert(row.end(), metrics.cells.begin(), metrics.cells.end());
        rows[static_cast<std::size_t>(ci)] = std::move(row);
        if (world.grid) {
            write_pgm(dir / "images" / image_name(to_string(method), si, "source"), source);
            write_pgm(dir / "images" / image_name(to_string(method), si, "edited"),
                      result.edited);
        }
    });

    CsvTable table;
    table.header = {"method", "seed"};
    const std::vector<std::string> metrics = metric_header(world);
    table.header.insert(table.header.end(), metrics.begin(), metrics.end());
    table.rows = std::move(rows);
    write_csv(dir / "results.csv", table);
}

// ---------------------------------------------------------------------------

namespace {

struct AblationCell {
    DistillMethod method = DistillMethod::dds;
    double lambda = 0.0;  // ids only
    int n_iters = 0;      // ids only
    int steps = 200;
    int range_index = 0;  // 0 = full, 1 = restricted to U(0, 0.2)
    int seed_index = 0;
};

}  // namespace

void run_ablation(const ExperimentConfig& config, const RunOptions& options) {
    const World world = build_world(config, true);
    const std::filesystem::path dir = prepare_out_dir(config, options, "ablate", false);
    const EditSection& e = config.edit;
    const AblationSection& ab = config.ablation;

    const std::vector<int> steps_list = {200, 400};
    const std::vector<int> iters_list = {0, 1, 3};
    const char* range_names[2] = {"full", "restricted"};

    // dds baseline rows first, then the ids sweep; row order is fixed here.
    std::vector<AblationCell> cells;
    for (int st : steps_list)
        for (int ri = 0; ri < 2; ++ri)
            for (int si = 0; si < ab.seeds; ++si)
                cells.push_back({DistillMethod::dds, 0.0, 0, st, ri, si});
    for (double lambda : ab.lambdas)
        for (int n : iters_list)
            for (int st : steps_list)
                for (int ri = 0; ri < 2; ++ri)
                    for (int si = 0; si < ab.seeds; ++si)
                        cells.push_back({DistillMethod::ids, lambda, n, st, ri, si});

    const int n_cells = static_cast<int>(cells.size());
    std::vector<std::vector<std::string>> rows(cells.size());
    std::vector<double> identity(cells.size());
    std::vector<double> dist_target(cells.size());
    std::vector<double> seconds(cells.size());
    const Rng master(config.seed);

    run_cells(options.jobs, n_cells, [&](int ci) {
        const AblationCell& cell = cells[static_cast<std::size_t>(ci)];
        // Seeds depend only on (steps, range, seed index): every lambda/N
        // variant and the dds baseline see identical sources and noise.
        const std::uint64_t coord =
            (static_cast<std::uint64_t>(cell.steps == 400 ? 1 : 0) * 2 +
             static_cast<std::uint64_t>(cell.range_index)) *
                static_cast<std::uint64_t>(ab.seeds) +
            static_cast<std::uint64_t>(cell.seed_index);
        const Rng trial = master.derive(coord);
        const Latent source = pick_source(world, e.source_label, cell.seed_index,
                                          trial.derive(0));
        DistillConfig dc = make_distill_config(e, cell.method, trial.derive(1).seed());
        dc.steps = cell.steps;
        if (cell.range_index == 1) {
            dc.t_min = 0.0;
            dc.t_max = 0.2;
        }
        if (cell.method == DistillMethod::ids) {
            dc.fpr.lambda = cell.lambda;
            dc.fpr.n_iters = cell.n_iters;
        }
        const EditTask task{source, Condition::label(e.source_label),
                            Condition::label(e.target_label)};
        const auto started = std::chrono::steady_clock::now();
        EditResult result;
        try {
            result = edit(*world.backend, task, dc, world.schedule);
        } catch (const DivergenceError& ex) {
            throw DivergenceError("task " + to_string(cell.method) + "/lambda" +
                                  format_double(cell.lambda) + "/seed" +
                                  std::to_string(cell.seed_index) + ": " + ex.what());
        }
        seconds[static_cast<std::size_t>(ci)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        EditMetrics metrics = compute_edit_metrics(world, e, source, result.edited);
        identity[static_cast<std::size_t>(ci)] = metrics.identity;
        dist_target[static_cast<std::size_t>(ci)] = metrics.dist_target;
        const bool ids = cell.method == DistillMethod::ids;
        std::vector<std::string> row = {to_string(cell.method),
                                        ids ? format_double(cell.lambda) : "",
                                        ids ? std::to_string(cell.n_iters) : "",
                                        std::to_string(cell.steps),
                                        range_names[cell.range_index],
                                        std::to_string(cell.seed_index)};
        row.insert(row.end(), metrics.cells.begin(), metrics.cells.end());
        rows[static_cast<std::size_t>(ci)] = std::move(row);
    });

    CsvTable table;
    table.header = {"method", "lambda", "n_iters", "steps", "t_range", "seed"};
    const std::vector<std::string> metrics = metric_header(world);
    table.header.insert(table.header.end(), metrics.begin(), metrics.end());
    table.rows = std::move(rows);
    write_csv(dir / "results.csv", table);

    // Per-group means over seeds: the lambda-trend table the sweep exists for.
    CsvTable summary;
    summary.header = {"method",  "lambda", "n_iters",
                      "steps",   "t_range", "mean_identity_residual",
                      "mean_dist_target_mode"};
    ordered_json timing = ordered_json::array();
    for (std::size_t start = 0; start < cells.size();
         start += static_cast<std::size_t>(ab.seeds)) {
        const AblationCell& cell = cells[start];
        double id_sum = 0.0, dist_sum = 0.0, sec_sum = 0.0;
        int id_count = 0;
        for (std::size_t i = start; i < start + static_cast<std::size_t>(ab.seeds); ++i) {
            if (std::isfinite(identity[i])) {
                id_sum += identity[i];
                ++id_count;
            }
            dist_sum += dist_target[i];
            sec_sum += seconds[i];
        }
        const bool ids = cell.method == DistillMethod::ids;
        summary.rows.push_back(
            {to_string(cell.method), ids ? format_double(cell.lambda) : "",
             ids ? std::to_string(cell.n_iters) : "", std::to_string(cell.steps),
             range_names[cell.range_index],
             id_count > 0 ? format_double(id_sum / id_count) : "undefined",
             format_double(dist_sum / ab.seeds)});
        ordered_json entry;
        entry["method"] = to_string(cell.method);
        if (ids) {
            entry["lambda"] = cell.lambda;
            entry["n_iters"] = cell.n_iters;
        }
        entry["steps"] = cell.steps;
        entry["t_range"] = range_names[cell.range_index];
        entry["mean_seconds_per_edit"] = sec_sum / ab.seeds;
        timing.push_back(std::move(entry));
    }
    write_csv(dir / "summary.csv", summary);
    // Wall-clock is inherently run-dependent, so it lives outside results.csv
    // to keep the data outputs byte-identical across reruns.
    write_json_file(dir / "timing.json", ordered_json{{"cells", std::move(timing)}});
}

// ---------------------------------------------------------------------------

void run_inversion(const ExperimentConfig& config, const RunOptions& options) {
    const World world = build_world(config, true);
    const std::filesystem::path dir = prepare_out_dir(config, options, "invert", world.grid);
    const EditSection& e = config.edit;
    const int seeds = config.inversion.seeds;

    const std::vector<DistillMethod> methods = {DistillMethod::dds, DistillMethod::ids};
    const int n_cells = static_cast<int>(methods.size()) * seeds;
    std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(n_cells));
    const Rng master(config.seed);

    run_cells(options.jobs, n_cells, [&](int ci) {
        const int mi = ci / seeds;
        const int si = ci % seeds;
        const DistillMethod method = methods[static_cast<std::size_t>(mi)];
        const Rng trial = master.derive(static_cast<std::uint64_t>(si));
        const Latent source = pick_source(world, e.source_label, si, trial.derive(0));
        const DistillConfig dc = make_distill_config(e, method, trial.derive(1).seed());
        const EditTask task{source, Condition::label(e.source_label),
                            Condition::label(e.target_label)};
        EditResult result;
        Latent reconstruction;
        try {
            result = edit(*world.backend, task, dc, world.schedule);
            reconstruction = invert(*world.backend, result, task, dc, world.schedule);
        } catch (const DivergenceError& ex) {
            throw DivergenceError("task " + to_string(method) + "/seed" + std::to_string(si) +
                                  ": " + ex.what());
        }
        rows[static_cast<std::size_t>(ci)] = {
            to_string(method), std::to_string(si),
            format_double(mse(reconstruction, source)),
            format_double(mse(result.edited, source)),
            format_double(anchor_distance(world, result.edited, e.target_label))};
        if (world.grid) {
            // Side-by-side source | edited | reconstruction panel.
            const int h = source.shape[0];
            const int w = source.shape[1];
            Latent panel = Latent::zeros({h, 3 * w + 2});
            const int stride = 3 * w + 2;
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    panel.data[static_cast<std::size_t>(r * stride + c)] =
                        source.data[static_cast<std::size_t>(r * w + c)];
                    panel.data[static_cast<std::size_t>(r * stride + w + 1 + c)] =
                        result.edited.data[static_cast<std::size_t>(r * w + c)];
                    panel.data[static_cast<std::size_t>(r * stride + 2 * w + 2 + c)] =
                        reconstruction.data[static_cast<std::size_t>(r * w + c)];
                }
                panel.data[static_cast<std::size_t>(r * stride + w)] = 1.0;
                panel.data[static_cast<std::size_t>(r * stride + 2 * w + 1)] = 1.0;
            }
            write_pgm(dir / "images" / image_name(to_string(method), si, "triptych"), panel);
        }
    });

    CsvTable table;
    table.header = {"method", "seed", "reconstruction_mse", "mse_source", "dist_target_mode"};
    table.rows = std::move(rows);
    write_csv(dir / "results.csv", table);
}

// ---------------------------------------------------------------------------

void run_posterior_sweep(const ExperimentConfig& config, const RunOptions& options) {
    const World world = build_world(config, true);
    const std::filesystem::path dir = prepare_out_dir(config, options, "sweep-posterior", false);
    const PosteriorSection& ps = config.posterior;
    const Condition cond = Condition::label(config.edit.source_label);
    const std::size_t n_ts = ps.t_values.size();

    std::vector<std::vector<std::vector<std::string>>> buffered(
        static_cast<std::size_t>(ps.seeds));
    const Rng master(config.seed);

    run_cells(options.jobs, ps.seeds, [&](int si) {
        const Rng trial = master.derive(static_cast<std::uint64_t>(si));
        const Latent source = pick_source(world, config.edit.source_label, si, trial.derive(0));
        Rng sweep_rng = trial.derive(1);
        Rng replay_rng = sweep_rng;  // same stream, replayed for the paired refinement
        const std::vector<PosteriorSweepPoint> points = posterior_mean_sweep(
            *world.backend, source, cond, ps.t_values, ps.omega, world.schedule, sweep_rng);

        std::vector<std::vector<std::string>> rows;
        for (std::size_t ti = 0; ti < n_ts; ++ti) {
            const double t = ps.t_values[ti];
            const Latent eps = sample_gaussian(replay_rng, source.shape);
            const double pre = points[ti].distance;
            double post_latent = pre;
            double post_noise = pre;
            if (t > 0.0) {
                // At t = 0 the diffusion is the identity and the estimate is
                // already exact, so refinement has nothing to move.
                for (FprUpdate update : {FprUpdate::latent, FprUpdate::noise}) {
                    FprConfig fc = ps.fpr;
                    fc.update = update;
                    const FprTrace trace =
                        fpr_refine(*world.backend, source, cond, t, eps, fc, world.schedule);
                    const Latent estimate = posterior_mean_guided(
                        *world.backend, trace.refined, cond, t, ps.omega, world.schedule);
                    (update == FprUpdate::latent ? post_latent : post_noise) =
                        norm(sub(source, estimate));
                }
            }
            rows.push_back({std::to_string(si), format_double(t), format_double(pre),
                            format_double(post_latent), format_double(post_noise)});
        }
        buffered[static_cast<std::size_t>(si)] = std::move(rows);
    });

    CsvTable table;
    table.header = {"seed", "t", "dist_pre", "dist_post_latent", "dist_post_noise"};
    for (auto& rows : buffered)
        for (auto& row : rows) table.rows.push_back(std::move(row));
    write_csv(dir / "results.csv", table);
}

// ---------------------------------------------------------------------------

void run_train(const ExperimentConfig& config, const RunOptions& options) {
    const World world = build_world(config, false);
    const std::filesystem::path dir = prepare_out_dir(config, options, "train", false);
    const TrainSection& tr = config.train;

    std::vector<TrainSample> dataset;
    if (world.vector) {
        const Rng data_master(tr.data_seed);
        for (int label = 0; label < world.labels; ++label) {
            Rng label_rng = data_master.derive(static_cast<std::uint64_t>(label));
            for (int i = 0; i < tr.per_label; ++i)
                dataset.push_back({world.vector->sample(label, label_rng), label});
        }
    } else {
        for (const ShapeSample& sample : world.shapes->samples)
            dataset.push_back({sample.image, sample.cond.label_id()});
    }

    Rng init_rng(tr.init_seed);
    MlpDenoiserBackend net =
        MlpDenoiserBackend::init(world.shape, world.labels, tr.hidden, init_rng);
    write_json_file(dir / "init-weights.json", net.to_json());

    TrainConfig tc;
    tc.epochs = tr.epochs;
    tc.learning_rate = tr.learning_rate;
    tc.cond_drop_prob = tr.cond_drop_prob;
    Rng train_rng = Rng(config.seed).derive(2);
    const std::vector<double> losses = net.train(dataset, world.schedule, train_rng, tc);
    write_json_file(dir / "weights.json", net.to_json());

    CsvTable table;
    table.header = {"epoch", "mean_loss"};
    for (std::size_t i = 0; i < losses.size(); ++i)
        table.rows.push_back({std::to_string(i), format_double(losses[i])});
    write_csv(dir / "results.csv", table);
}

}  // namespace sdlab::cli
