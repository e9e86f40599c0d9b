#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdlab/backend.hpp"
#include "sdlab/fpr.hpp"
#include "sdlab/latent.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab {

enum class DistillMethod { sds, dds, ids, fpr_sds };

struct DistillConfig {
    DistillMethod method = DistillMethod::ids;
    double omega = 7.5;
    int steps = 200;
    double lr = 0.05;
    double t_min = 0.05;
    double t_max = 0.95;
    FprConfig fpr;  // inner-loop settings for ids and fpr-sds
    std::uint64_t seed = 0;
};

struct EditTask {
    Latent source;
    Condition cond_source = Condition::null();
    Condition cond_target = Condition::null();
};

struct NoiseRecordEntry {
    double t = 0.0;
    Latent noise;  // the noise that actually shaped this step's latents
};

struct EditResult {
    Latent edited;
    std::vector<Latent> trajectory;  // periodic snapshots, empty unless requested
    std::vector<NoiseRecordEntry> noise_record;
    std::vector<double> grad_norms;
};

// Score-distillation gradient: guided prediction at the diffused current
// latent minus the injected noise.
Latent sds_gradient(const ScoreBackend& backend, const Latent& current, const Condition& cond,
                    double t, const Latent& noise, double omega, const NoiseSchedule& schedule);

// Delta-denoising gradient: both latents share one injected noise, and the
// update is the difference of guided predictions (target side minus source
// side). Identical inputs on both sides cancel exactly.
Latent dds_gradient(const ScoreBackend& backend, const Latent& current, const Condition& cond_target,
                    const Latent& source, const Condition& cond_source, double t,
                    const Latent& noise, double omega, const NoiseSchedule& schedule);

struct IdsGradient {
    Latent gradient;
    FprTrace trace;  // the source-side refinement behind this step
};

// Identity-preserving gradient: refine the source-side latent first, extract
// the noise that explains the refined latent, and build BOTH sides' latents by
// forward-diffusing with that noise before taking the dds-style difference.
// Re-deriving the source side from the extracted noise keeps the two sides on
// the identical arithmetic path, so equal inputs still cancel exactly.
IdsGradient ids_gradient(const ScoreBackend& backend, const Latent& current,
                         const Condition& cond_target, const Latent& source,
                         const Condition& cond_source, double t, const Latent& noise, double omega,
                         const FprConfig& fpr_cfg, const NoiseSchedule& schedule);

// Outer optimisation loop. snapshot_every > 0 appends the running latent to
// the trajectory after every that-many steps.
EditResult edit(const ScoreBackend& backend, const EditTask& task, const DistillConfig& config,
                const NoiseSchedule& schedule, int snapshot_every = 0);

// Reconstruction harness: starting from the edited latent, replay the stored
// (t, noise) records newest-first with the source/target roles swapped, using
// the dds-form update those records were built for. For ids edits the record
// already holds the refined noise, so the replay revisits the exact latents
// the forward pass used. Only dds and ids records can be replayed.
Latent invert(const ScoreBackend& backend, const EditResult& result, const EditTask& original,
              const DistillConfig& config, const NoiseSchedule& schedule);

nlohmann::ordered_json edit_result_to_json(const EditResult& result, const DistillConfig& config);
EditResult edit_result_from_json(const nlohmann::json& doc);

DistillMethod distill_method_from_string(const std::string& name);
std::string to_string(DistillMethod method);

}  // namespace sdlab
