#include "sdlab/tweedie.hpp"

#include <cmath>

#include "sdlab/diffusion.hpp"
#include "sdlab/errors.hpp"
#include "sdlab/guidance.hpp"

namespace sdlab {

Latent posterior_mean(const Latent& noisy, const Latent& predicted_noise, double t,
                      const NoiseSchedule& schedule) {
    require_same_shape(noisy, predicted_noise, "posterior_mean");
    double alpha = alpha_at(schedule, t);
    if (alpha == 0.0) throw DomainError("posterior mean undefined at alpha = 0");
    double inv_root = 1.0 / std::sqrt(alpha);
    return lincomb(inv_root, noisy, -std::sqrt(1.0 - alpha) * inv_root, predicted_noise);
}

Latent posterior_mean_guided(const ScoreBackend& backend, const Latent& noisy,
                             const Condition& cond, double t, double omega,
                             const NoiseSchedule& schedule) {
    return posterior_mean(noisy, guided_score(backend, noisy, cond, t, omega), t, schedule);
}

std::vector<PosteriorSweepPoint> posterior_mean_sweep(const ScoreBackend& backend,
                                                      const Latent& source, const Condition& cond,
                                                      const std::vector<double>& ts, double omega,
                                                      const NoiseSchedule& schedule, Rng& rng) {
    std::vector<PosteriorSweepPoint> points;
    points.reserve(ts.size());
    for (double t : ts) {
        Latent eps = sample_gaussian(rng, source.shape);
        Latent noisy = forward_diffuse(source, eps, t, schedule);
        PosteriorSweepPoint p;
        p.t = t;
        p.estimate = posterior_mean_guided(backend, noisy, cond, t, omega, schedule);
        p.distance = norm(sub(source, p.estimate));
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace sdlab
