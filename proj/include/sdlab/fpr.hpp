#pragma once

#include <vector>

#include "sdlab/backend.hpp"
#include "sdlab/latent.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab {

enum class FprMetric { euclidean, l1, ssim };

// Which variable the refinement steps move: the noisy latent itself, or the
// injection noise (with the latent re-synthesised after every step). The
// latent update is the shipped default; the noise update exists for the
// update-variant comparison in the posterior sweep.
enum class FprUpdate { latent, noise };

struct FprConfig {
    double lambda = 1.0;
    int n_iters = 3;
    FprMetric metric = FprMetric::euclidean;
    // Guidance scale used *inside* the refinement loop. Defaults to unguided:
    // at lambda = 1.0 a strongly guided posterior mean has steep enough
    // curvature near mixture boundaries that the fixed-point iteration
    // overshoots and diverges. Guided refinement stays available by setting
    // this explicitly.
    double omega = 0.0;
    FprUpdate update = FprUpdate::latent;
};

struct FprTrace {
    // Loss measured before each update; length = n_iters.
    std::vector<double> losses;
    Latent refined;       // z_t after the final update
    Latent guided_noise;  // noise whose forward diffusion reproduces `refined`
    // Diagnostic only: the loss evaluated once more after the final update.
    // The iteration itself never sees this value.
    double post_loss = 0.0;
};

// Distance between the clean source and a posterior-mean estimate of it.
// euclidean = sum of squared differences, l1 = sum of absolute differences,
// ssim = 1 - SSIM (dynamic range taken from the source; grids only).
double fpr_loss(const Latent& source, const Latent& estimate, FprMetric metric);

// The refinement objective as a function of the noisy latent: predict noise,
// take the posterior mean, compare to the source. Used by tests to
// finite-difference the gradient below.
double fpr_objective(const ScoreBackend& backend, const Latent& source, const Latent& noisy,
                     const Condition& cond, double t, const FprConfig& cfg,
                     const NoiseSchedule& schedule);

// Analytic gradient of fpr_objective with respect to the noisy latent. The
// chain rule through the posterior mean gives
//   (1/sqrt(alpha)) * (q - sqrt(1-alpha) * guided_score_vjp(noisy, ..., q))
// where q is the metric's (sub)gradient at the posterior-mean estimate.
Latent fpr_gradient(const ScoreBackend& backend, const Latent& source, const Latent& noisy,
                    const Condition& cond, double t, const FprConfig& cfg,
                    const NoiseSchedule& schedule);

// Inner refinement loop: diffuse the source with the given noise, then take
// n_iters gradient steps pulling the posterior mean of the noisy latent back
// onto the source, and extract the noise that explains the refined latent.
// n_iters = 0 is a strict no-op: refined = the fresh diffusion and
// guided_noise = noise, copied exactly.
FprTrace fpr_refine(const ScoreBackend& backend, const Latent& source, const Condition& cond,
                    double t, const Latent& noise, const FprConfig& cfg,
                    const NoiseSchedule& schedule);

// Inverse of the forward diffusion in its noise argument:
// (refined - sqrt(alpha) * source) / sqrt(1 - alpha). Undefined at t = 0.
Latent extract_guided_noise(const Latent& refined, const Latent& source, double t,
                            const NoiseSchedule& schedule);

FprMetric fpr_metric_from_string(const std::string& name);
std::string to_string(FprMetric metric);
FprUpdate fpr_update_from_string(const std::string& name);
std::string to_string(FprUpdate update);

}  // namespace sdlab
