#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sdlab/errors.hpp"

namespace sdlab::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Tracks which keys of one JSON object were consumed so that anything left
// over can be reported as an unknown key with its full config path.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        throw ConfigError(join(key) + ": " + message);
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json* object(const std::string& key) {
        if (!node_.contains(key)) return nullptr;
        consumed_.insert(key);
        const json& child = node_.at(key);
        if (!child.is_object()) fail(key, "expected an object");
        return &child;
    }

    double number(const std::string& key, double fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        const double out = v.get<double>();
        if (!std::isfinite(out)) fail(key, "expected a finite number");
        return out;
    }

    int integer(const std::string& key, int fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        return v.get<int>();
    }

    std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
            fail(key, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key, std::string fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> number_list(const std::string& key, std::vector<double> fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const json& item : v) {
            if (!item.is_number() || !std::isfinite(item.get<double>()))
                fail(key, "expected finite numbers");
            out.push_back(item.get<double>());
        }
        return out;
    }

    std::vector<int> integer_list(const std::string& key, std::vector<int> fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_array()) fail(key, "expected an array of integers");
        std::vector<int> out;
        for (const json& item : v) {
            if (!item.is_number_integer()) fail(key, "expected integers");
            out.push_back(item.get<int>());
        }
        return out;
    }

    std::vector<std::string> text_list(const std::string& key,
                                       std::vector<std::string> fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_array()) fail(key, "expected an array of strings");
        std::vector<std::string> out;
        for (const json& item : v) {
            if (!item.is_string()) fail(key, "expected strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    std::vector<std::vector<double>> number_grid(const std::string& key,
                                                 std::vector<std::vector<double>> fallback) {
        if (!node_.contains(key)) return fallback;
        consumed_.insert(key);
        const json& v = node_.at(key);
        if (!v.is_array()) fail(key, "expected an array of number arrays");
        std::vector<std::vector<double>> out;
        for (const json& row : v) {
            if (!row.is_array()) fail(key, "expected an array of number arrays");
            std::vector<double> vals;
            for (const json& item : row) {
                if (!item.is_number() || !std::isfinite(item.get<double>()))
                    fail(key, "expected finite numbers");
                vals.push_back(item.get<double>());
            }
            out.push_back(std::move(vals));
        }
        return out;
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!consumed_.count(it.key()))
                throw ConfigError(join(it.key()) + ": unknown key");
        }
    }

    const std::string& path() const { return path_; }

private:
    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& node_;
    std::string path_;
    std::set<std::string> consumed_;
};

NoiseSchedule parse_schedule(ObjectReader& parent) {
    NoiseSchedule schedule;
    if (const json* node = parent.object("schedule")) {
        ObjectReader r(*node, parent.path().empty() ? "schedule" : parent.path() + ".schedule");
        const std::string kind = r.text("kind", to_string(schedule.kind));
        try {
            schedule.kind = schedule_kind_from_string(kind);
        } catch (const Error&) {
            r.fail("kind", "expected \"linear-alpha\" or \"cosine\"");
        }
        schedule.alpha_min = r.number("alpha_min", schedule.alpha_min);
        if (!(schedule.alpha_min >= 0.0 && schedule.alpha_min < 1.0))
            r.fail("alpha_min", "expected a value in [0, 1)");
        r.finish();
    }
    return schedule;
}

WorldConfig parse_world(const json* node) {
    WorldConfig world;
    if (!node) return world;
    ObjectReader r(*node, "world");
    world.type = r.text("type", world.type);
    if (world.type != "vector" && world.type != "shape")
        r.fail("type", "expected \"vector\" or \"shape\"");
    world.schedule = parse_schedule(r);
    if (world.type == "vector") {
        world.modes = r.number_grid("modes", world.modes);
        if (world.modes.size() < 2) r.fail("modes", "need at least two modes");
        for (const auto& mode : world.modes) {
            if (mode.empty() || mode.size() != world.modes.front().size())
                r.fail("modes", "modes must be non-empty and share a dimension");
        }
        world.sigma = r.number("sigma", world.sigma);
        if (!(world.sigma > 0.0)) r.fail("sigma", "expected a positive number");
    } else {
        world.per_label = r.integer("per_label", world.per_label);
        if (world.per_label < 1) r.fail("per_label", "expected a positive integer");
        world.height = r.integer("height", world.height);
        world.width = r.integer("width", world.width);
        if (world.height < 7 || world.width < 7)
            r.fail(world.height < 7 ? "height" : "width", "grid must be at least 7x7");
        world.smoothing_passes = r.integer("smoothing_passes", world.smoothing_passes);
        if (world.smoothing_passes < 0)
            r.fail("smoothing_passes", "expected a non-negative integer");
        world.dataset_seed = r.unsigned64("dataset_seed", world.dataset_seed);
        world.component_sigma = r.number("component_sigma", world.component_sigma);
        if (!(world.component_sigma > 0.0))
            r.fail("component_sigma", "expected a positive number");
    }
    r.finish();
    return world;
}

BackendConfig parse_backend(const json* node) {
    BackendConfig backend;
    if (!node) return backend;
    ObjectReader r(*node, "backend");
    backend.type = r.text("type", backend.type);
    if (backend.type != "analytic" && backend.type != "mlp")
        r.fail("type", "expected \"analytic\" or \"mlp\"");
    if (backend.type == "mlp") {
        backend.weights = r.text("weights", "");
        if (backend.weights.empty()) r.fail("weights", "mlp backends need a weights path");
    } else if (r.has("weights")) {
        r.fail("weights", "only valid for mlp backends");
    }
    r.finish();
    return backend;
}

FprConfig parse_fpr(ObjectReader& parent, FprConfig defaults) {
    FprConfig fpr = defaults;
    if (const json* node = parent.object("fpr")) {
        ObjectReader r(*node, parent.path().empty() ? "fpr" : parent.path() + ".fpr");
        fpr.lambda = r.number("lambda", fpr.lambda);
        fpr.n_iters = r.integer("n_iters", fpr.n_iters);
        if (fpr.n_iters < 0) r.fail("n_iters", "expected a non-negative integer");
        if (fpr.n_iters > 0 && !(fpr.lambda > 0.0))
            r.fail("lambda", "expected a positive number when n_iters > 0");
        const std::string metric = r.text("metric", to_string(fpr.metric));
        try {
            fpr.metric = fpr_metric_from_string(metric);
        } catch (const Error&) {
            r.fail("metric", "expected \"euclidean\", \"l1\" or \"ssim\"");
        }
        fpr.omega = r.number("omega", fpr.omega);
        if (!(fpr.omega >= -1.0)) r.fail("omega", "expected a value >= -1");
        const std::string update = r.text("update", to_string(fpr.update));
        try {
            fpr.update = fpr_update_from_string(update);
        } catch (const Error&) {
            r.fail("update", "expected \"latent\" or \"noise\"");
        }
        r.finish();
    }
    return fpr;
}

int world_label_count(const WorldConfig& world) {
    return world.type == "vector" ? static_cast<int>(world.modes.size()) : 2;
}

EditSection parse_edit(const json* node, const WorldConfig& world) {
    EditSection edit;
    edit.lr = world.type == "shape" ? 0.1 : 0.05;
    if (!node) return edit;
    ObjectReader r(*node, "edit");
    std::vector<std::string> method_names;
    for (DistillMethod m : edit.methods) method_names.push_back(to_string(m));
    method_names = r.text_list("methods", method_names);
    if (method_names.empty()) r.fail("methods", "need at least one method");
    edit.methods.clear();
    for (const std::string& name : method_names) {
        try {
            edit.methods.push_back(distill_method_from_string(name));
        } catch (const Error&) {
            r.fail("methods", "unknown method \"" + name + "\"");
        }
    }
    edit.omega = r.number("omega", edit.omega);
    if (!(edit.omega >= -1.0)) r.fail("omega", "expected a value >= -1");
    edit.steps = r.integer("steps", edit.steps);
    if (edit.steps < 0) r.fail("steps", "expected a non-negative integer");
    edit.lr = r.number("lr", edit.lr);
    if (!(edit.lr > 0.0)) r.fail("lr", "expected a positive number");
    edit.t_min = r.number("t_min", edit.t_min);
    edit.t_max = r.number("t_max", edit.t_max);
    if (!(edit.t_min >= 0.0 && edit.t_min < edit.t_max && edit.t_max <= 1.0))
        r.fail("t_min", "need 0 <= t_min < t_max <= 1");
    edit.seeds = r.integer("seeds", edit.seeds);
    if (edit.seeds < 1) r.fail("seeds", "expected a positive integer");
    edit.source_label = r.integer("source_label", edit.source_label);
    edit.target_label = r.integer("target_label", edit.target_label);
    const int labels = world_label_count(world);
    if (edit.source_label < 0 || edit.source_label >= labels)
        r.fail("source_label", "label out of range for the world");
    if (edit.target_label < 0 || edit.target_label >= labels)
        r.fail("target_label", "label out of range for the world");
    edit.snapshot_every = r.integer("snapshot_every", edit.snapshot_every);
    if (edit.snapshot_every < 0) r.fail("snapshot_every", "expected a non-negative integer");
    edit.fpr = parse_fpr(r, edit.fpr);
    r.finish();
    return edit;
}

AblationSection parse_ablation(const json* node) {
    AblationSection ablation;
    if (!node) return ablation;
    ObjectReader r(*node, "ablation");
    ablation.lambdas = r.number_list("lambdas", ablation.lambdas);
    if (ablation.lambdas.empty()) r.fail("lambdas", "need at least one value");
    for (double lambda : ablation.lambdas) {
        if (!(lambda > 0.0)) r.fail("lambdas", "expected positive values");
    }
    ablation.seeds = r.integer("seeds", ablation.seeds);
    if (ablation.seeds < 1) r.fail("seeds", "expected a positive integer");
    r.finish();
    return ablation;
}

InversionSection parse_inversion(const json* node) {
    InversionSection inversion;
    if (!node) return inversion;
    ObjectReader r(*node, "inversion");
    inversion.seeds = r.integer("seeds", inversion.seeds);
    if (inversion.seeds < 1) r.fail("seeds", "expected a positive integer");
    r.finish();
    return inversion;
}

PosteriorSection parse_posterior(const json* node) {
    PosteriorSection posterior;
    posterior.fpr.omega = posterior.omega;
    if (!node) return posterior;
    ObjectReader r(*node, "posterior_sweep");
    posterior.t_values = r.number_list("t_values", posterior.t_values);
    if (posterior.t_values.empty()) r.fail("t_values", "need at least one value");
    for (double t : posterior.t_values) {
        if (!(t >= 0.0 && t <= 1.0)) r.fail("t_values", "expected values in [0, 1]");
    }
    posterior.seeds = r.integer("seeds", posterior.seeds);
    if (posterior.seeds < 1) r.fail("seeds", "expected a positive integer");
    posterior.omega = r.number("omega", posterior.omega);
    if (!(posterior.omega >= -1.0)) r.fail("omega", "expected a value >= -1");
    FprConfig defaults;
    defaults.omega = posterior.omega;
    posterior.fpr = parse_fpr(r, defaults);
    r.finish();
    return posterior;
}

TrainSection parse_train(const json* node) {
    TrainSection train;
    if (!node) return train;
    ObjectReader r(*node, "train");
    train.per_label = r.integer("per_label", train.per_label);
    if (train.per_label < 1) r.fail("per_label", "expected a positive integer");
    train.data_seed = r.unsigned64("data_seed", train.data_seed);
    train.hidden = r.integer_list("hidden", train.hidden);
    if (train.hidden.empty()) r.fail("hidden", "need at least one hidden width");
    for (int width : train.hidden) {
        if (width < 1) r.fail("hidden", "expected positive widths");
    }
    train.epochs = r.integer("epochs", train.epochs);
    if (train.epochs < 0) r.fail("epochs", "expected a non-negative integer");
    train.learning_rate = r.number("learning_rate", train.learning_rate);
    if (!(train.learning_rate > 0.0)) r.fail("learning_rate", "expected a positive number");
    train.cond_drop_prob = r.number("cond_drop_prob", train.cond_drop_prob);
    if (!(train.cond_drop_prob >= 0.0 && train.cond_drop_prob <= 1.0))
        r.fail("cond_drop_prob", "expected a value in [0, 1]");
    train.init_seed = r.unsigned64("init_seed", train.init_seed);
    r.finish();
    return train;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << file.rdbuf();
    const std::string text = buffer.str();

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t upto = e.byte > 0 ? std::min(e.byte - 1, text.size()) : 0;
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') ++line;
        }
        throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }

    ObjectReader root(doc, "");
    if (!root.has("schema")) root.fail("schema", "missing required key");
    const int schema = root.integer("schema", 0);
    if (schema != 1) root.fail("schema", "unsupported schema version");

    ExperimentConfig config;
    config.name = root.text("name", config.name);
    if (config.name.empty() || config.name.find('/') != std::string::npos ||
        config.name.find('\\') != std::string::npos)
        root.fail("name", "expected a non-empty name without path separators");
    config.seed = root.unsigned64("seed", config.seed);
    config.world = parse_world(root.object("world"));
    config.backend = parse_backend(root.object("backend"));
    config.edit = parse_edit(root.object("edit"), config.world);
    config.ablation = parse_ablation(root.object("ablation"));
    config.inversion = parse_inversion(root.object("inversion"));
    config.posterior = parse_posterior(root.object("posterior_sweep"));
    config.train = parse_train(root.object("train"));
    root.finish();
    return config;
}

namespace {

ordered_json schedule_json(const NoiseSchedule& schedule) {
    return {{"kind", to_string(schedule.kind)}, {"alpha_min", schedule.alpha_min}};
}

ordered_json fpr_json(const FprConfig& fpr) {
    return {{"lambda", fpr.lambda},
            {"n_iters", fpr.n_iters},
            {"metric", to_string(fpr.metric)},
            {"omega", fpr.omega},
            {"update", to_string(fpr.update)}};
}

}  // namespace

nlohmann::ordered_json resolved_config_json(const ExperimentConfig& config) {
    ordered_json doc;
    doc["schema"] = 1;
    doc["name"] = config.name;
    doc["seed"] = config.seed;

    ordered_json world;
    world["type"] = config.world.type;
    if (config.world.type == "vector") {
        world["modes"] = config.world.modes;
        world["sigma"] = config.world.sigma;
    } else {
        world["per_label"] = config.world.per_label;
        world["height"] = config.world.height;
        world["width"] = config.world.width;
        world["smoothing_passes"] = config.world.smoothing_passes;
        world["dataset_seed"] = config.world.dataset_seed;
        world["component_sigma"] = config.world.component_sigma;
    }
    world["schedule"] = schedule_json(config.world.schedule);
    doc["world"] = std::move(world);

    ordered_json backend;
    backend["type"] = config.backend.type;
    if (config.backend.type == "mlp") backend["weights"] = config.backend.weights;
    doc["backend"] = std::move(backend);

    ordered_json edit;
    edit["methods"] = ordered_json::array();
    for (DistillMethod m : config.edit.methods) edit["methods"].push_back(to_string(m));
    edit["omega"] = config.edit.omega;
    edit["steps"] = config.edit.steps;
    edit["lr"] = config.edit.lr;
    edit["t_min"] = config.edit.t_min;
    edit["t_max"] = config.edit.t_max;
    edit["seeds"] = config.edit.seeds;
    edit["source_label"] = config.edit.source_label;
    edit["target_label"] = config.edit.target_label;
    edit["snapshot_every"] = config.edit.snapshot_every;
    edit["fpr"] = fpr_json(config.edit.fpr);
    doc["edit"] = std::move(edit);

    doc["ablation"] = {{"lambdas", config.ablation.lambdas}, {"seeds", config.ablation.seeds}};
    doc["inversion"] = {{"seeds", config.inversion.seeds}};

    ordered_json posterior;
    posterior["t_values"] = config.posterior.t_values;
    posterior["seeds"] = config.posterior.seeds;
    posterior["omega"] = config.posterior.omega;
    posterior["fpr"] = fpr_json(config.posterior.fpr);
    doc["posterior_sweep"] = std::move(posterior);

    ordered_json train;
    train["per_label"] = config.train.per_label;
    train["data_seed"] = config.train.data_seed;
    train["hidden"] = config.train.hidden;
    train["epochs"] = config.train.epochs;
    train["learning_rate"] = config.train.learning_rate;
    train["cond_drop_prob"] = config.train.cond_drop_prob;
    train["init_seed"] = config.train.init_seed;
    doc["train"] = std::move(train);
    return doc;
}

}  // namespace sdlab::cli
