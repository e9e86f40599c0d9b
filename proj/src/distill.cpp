#include "sdlab/distill.hpp"

#include <cmath>
#include <string>

#include "sdlab/diffusion.hpp"
#include "sdlab/errors.hpp"
#include "sdlab/guidance.hpp"
#include "sdlab/rng.hpp"

namespace sdlab {

namespace {

void validate(const DistillConfig& cfg) {
    if (cfg.steps < 0) throw DomainError("steps must be non-negative");
    if (!(cfg.lr > 0.0)) throw DomainError("learning rate must be positive");
    if (!(cfg.omega >= -1.0)) throw DomainError("guidance scale must be >= -1");
    if (!(cfg.t_min >= 0.0 && cfg.t_min < cfg.t_max && cfg.t_max <= 1.0))
        throw DomainError("time range must satisfy 0 <= t_min < t_max <= 1");
}

constexpr double kLatentNormGuard = 1e6;

void guard_latent(const Latent& latent, int step, const char* what) {
    if (!latent.all_finite())
        throw DivergenceError(std::string(what) + " latent became non-finite at step " +
                              std::to_string(step));
    if (norm(latent) > kLatentNormGuard)
        throw DivergenceError(std::string(what) + " latent norm exceeded 1e6 at step " +
                              std::to_string(step));
}

}  // namespace

Latent sds_gradient(const ScoreBackend& backend, const Latent& current, const Condition& cond,
                    double t, const Latent& noise, double omega, const NoiseSchedule& schedule) {
    Latent noisy = forward_diffuse(current, noise, t, schedule);
    return sub(guided_score(backend, noisy, cond, t, omega), noise);
}

Latent dds_gradient(const ScoreBackend& backend, const Latent& current, const Condition& cond_target,
                    const Latent& source, const Condition& cond_source, double t,
                    const Latent& noise, double omega, const NoiseSchedule& schedule) {
    require_same_shape(current, source, "dds_gradient");
    Latent noisy_target = forward_diffuse(current, noise, t, schedule);
    Latent noisy_source = forward_diffuse(source, noise, t, schedule);
    return sub(guided_score(backend, noisy_target, cond_target, t, omega),
               guided_score(backend, noisy_source, cond_source, t, omega));
}

IdsGradient ids_gradient(const ScoreBackend& backend, const Latent& current,
                         const Condition& cond_target, const Latent& source,
                         const Condition& cond_source, double t, const Latent& noise, double omega,
                         const FprConfig& fpr_cfg, const NoiseSchedule& schedule) {
    require_same_shape(current, source, "ids_gradient");
    IdsGradient out;
    out.trace = fpr_refine(backend, source, cond_source, t, noise, fpr_cfg, schedule);
    // Both latents are synthesised from the refined noise through the same
    // forward expression; see the header note on exact cancellation.
    Latent noisy_source = forward_diffuse(source, out.trace.guided_noise, t, schedule);
    Latent noisy_target = forward_diffuse(current, out.trace.guided_noise, t, schedule);
    out.gradient = sub(guided_score(backend, noisy_target, cond_target, t, omega),
                       guided_score(backend, noisy_source, cond_source, t, omega));
    return out;
}

EditResult edit(const ScoreBackend& backend, const EditTask& task, const DistillConfig& config,
                const NoiseSchedule& schedule, int snapshot_every) {
    validate(config);
    if (snapshot_every < 0) throw DomainError("snapshot interval must be non-negative");

    EditResult result;
    result.edited = task.source;
    result.noise_record.reserve(config.steps);
    result.grad_norms.reserve(config.steps);
    Rng rng(config.seed);

    for (int step = 0; step < config.steps; ++step) {
        double t = sample_time(rng, config.t_min, config.t_max);
        Latent eps = sample_gaussian(rng, task.source.shape);

        Latent gradient;
        Latent recorded;
        switch (config.method) {
            case DistillMethod::sds:
                gradient = sds_gradient(backend, result.edited, task.cond_target, t, eps,
                                        config.omega, schedule);
                recorded = eps;
                break;
            case DistillMethod::dds:
                gradient = dds_gradient(backend, result.edited, task.cond_target, task.source,
                                        task.cond_source, t, eps, config.omega, schedule);
                recorded = eps;
                break;
            case DistillMethod::ids: {
                IdsGradient g = ids_gradient(backend, result.edited, task.cond_target, task.source,
                                             task.cond_source, t, eps, config.omega, config.fpr,
                                             schedule);
                gradient = std::move(g.gradient);
                recorded = std::move(g.trace.guided_noise);
                break;
            }
            case DistillMethod::fpr_sds: {
                // Score distillation with the refinement anchored on the
                // current latent itself: refine, then take the sds step with
                // the refined noise and latent.
                FprTrace trace = fpr_refine(backend, result.edited, task.cond_target, t, eps,
                                            config.fpr, schedule);
                Latent noisy = forward_diffuse(result.edited, trace.guided_noise, t, schedule);
                gradient = sub(guided_score(backend, noisy, task.cond_target, t, config.omega),
                               trace.guided_noise);
                recorded = std::move(trace.guided_noise);
                break;
            }
        }

        result.grad_norms.push_back(norm(gradient));
        axpy(result.edited, -config.lr, gradient);
        guard_latent(result.edited, step, "edit");
        result.noise_record.push_back({t, std::move(recorded)});
        if (snapshot_every > 0 && (step + 1) % snapshot_every == 0)
            result.trajectory.push_back(result.edited);
    }
    return result;
}

Latent invert(const ScoreBackend& backend, const EditResult& result, const EditTask& original,
              const DistillConfig& config, const NoiseSchedule& schedule) {
    validate(config);
    if (config.method != DistillMethod::dds && config.method != DistillMethod::ids)
        throw ReplayError("only dds and ids records can be replayed for inversion");
    if (result.noise_record.size() != static_cast<std::size_t>(config.steps))
        throw ReplayError("noise record length does not match the config step count");
    if (!result.edited.same_shape(original.source))
        throw ReplayError("edited latent shape does not match the original task");

    // Role swap: the edited latent is now the fixed source side under the
    // target condition, and the moving latent walks back toward the original
    // source under the source condition.
    Latent reconstruction = result.edited;
    for (std::size_t i = result.noise_record.size(); i-- > 0;) {
        const NoiseRecordEntry& entry = result.noise_record[i];
        if (!entry.noise.same_shape(original.source))
            throw ReplayError("noise record entry shape does not match the task");
        Latent gradient =
            dds_gradient(backend, reconstruction, original.cond_source, result.edited,
                         original.cond_target, entry.t, entry.noise, config.omega, schedule);
        axpy(reconstruction, -config.lr, gradient);
        guard_latent(reconstruction, static_cast<int>(i), "inversion");
    }
    return reconstruction;
}

nlohmann::ordered_json edit_result_to_json(const EditResult& result, const DistillConfig& config) {
    nlohmann::ordered_json doc;
    doc["schema"] = 1;
    doc["kind"] = "edit-result";
    doc["config"] = {
        {"method", to_string(config.method)},
        {"omega", config.omega},
        {"steps", config.steps},
        {"lr", config.lr},
        {"t_min", config.t_min},
        {"t_max", config.t_max},
        {"seed", config.seed},
        {"fpr",
         {{"lambda", config.fpr.lambda},
          {"n_iters", config.fpr.n_iters},
          {"metric", to_string(config.fpr.metric)},
          {"omega", config.fpr.omega},
          {"update", to_string(config.fpr.update)}}},
    };
    doc["shape"] = result.edited.shape;
    doc["edited"] = result.edited.data;
    doc["grad_norms"] = result.grad_norms;
    doc["noise_record"] = nlohmann::ordered_json::array();
    for (const auto& entry : result.noise_record) {
        doc["noise_record"].push_back({{"t", entry.t}, {"noise", entry.noise.data}});
    }
    doc["trajectory"] = nlohmann::ordered_json::array();
    for (const auto& snap : result.trajectory) doc["trajectory"].push_back(snap.data);
    return doc;
}

EditResult edit_result_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("schema").get<int>() != 1) throw DataError("unsupported edit-result schema");
        if (doc.at("kind").get<std::string>() != "edit-result")
            throw DataError("document is not an edit-result");
        auto shape = doc.at("shape").get<std::vector<int>>();
        EditResult result;
        result.edited = Latent(doc.at("edited").get<std::vector<double>>(), shape);
        result.grad_norms = doc.at("grad_norms").get<std::vector<double>>();
        for (const auto& entry : doc.at("noise_record")) {
            NoiseRecordEntry rec;
            rec.t = entry.at("t").get<double>();
            rec.noise = Latent(entry.at("noise").get<std::vector<double>>(), shape);
            result.noise_record.push_back(std::move(rec));
        }
        for (const auto& snap : doc.at("trajectory"))
            result.trajectory.emplace_back(snap.get<std::vector<double>>(), shape);
        return result;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed edit-result document: ") + e.what());
    }
}

DistillMethod distill_method_from_string(const std::string& name) {
    if (name == "sds") return DistillMethod::sds;
    if (name == "dds") return DistillMethod::dds;
    if (name == "ids") return DistillMethod::ids;
    if (name == "fpr-sds") return DistillMethod::fpr_sds;
    throw DomainError("unknown method '" + name + "'");
}

std::string to_string(DistillMethod method) {
    switch (method) {
        case DistillMethod::sds: return "sds";
        case DistillMethod::dds: return "dds";
        case DistillMethod::ids: return "ids";
        case DistillMethod::fpr_sds: return "fpr-sds";
    }
    return "?";
}

}  // namespace sdlab
