#pragma once

#include <vector>

#include "sdlab/backend.hpp"
#include "sdlab/latent.hpp"
#include "sdlab/rng.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab {

// Posterior-mean estimate of the clean latent given a diffused one and a noise
// prediction for it:
//   z0_hat = (z_t - sqrt(1 - alpha) * predicted) / sqrt(alpha)
// Throws DomainError when alpha(t) = 0 (only reachable with alpha_min = 0 at t = 1).
Latent posterior_mean(const Latent& noisy, const Latent& predicted_noise, double t,
                      const NoiseSchedule& schedule);

// Convenience: guided prediction, then posterior mean.
Latent posterior_mean_guided(const ScoreBackend& backend, const Latent& noisy,
                             const Condition& cond, double t, double omega,
                             const NoiseSchedule& schedule);

struct PosteriorSweepPoint {
    double t = 0.0;
    Latent estimate;      // z0_hat at this t
    double distance = 0.0;  // || source - z0_hat ||_2
};

// For each t: draw fresh noise, diffuse the source, run the guided posterior
// mean, and report how far it lands from the source. One draw per t, consumed
// in grid order, so a seeded rng makes the whole sweep replayable.
std::vector<PosteriorSweepPoint> posterior_mean_sweep(const ScoreBackend& backend,
                                                      const Latent& source, const Condition& cond,
                                                      const std::vector<double>& ts, double omega,
                                                      const NoiseSchedule& schedule, Rng& rng);

}  // namespace sdlab
