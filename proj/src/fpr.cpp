#include "sdlab/fpr.hpp"

#include <cmath>
#include <string>

#include "sdlab/diffusion.hpp"
#include "sdlab/errors.hpp"
#include "sdlab/guidance.hpp"
#include "sdlab/metrics.hpp"
#include "sdlab/tweedie.hpp"

namespace sdlab {

namespace {

// Dynamic range used by the ssim metric: spread of the source, with a unit
// fallback for constant sources so the constants stay positive.
double source_range(const Latent& source) {
    double lo = source.data[0], hi = source.data[0];
    for (double v : source.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi > lo ? hi - lo : 1.0;
}

// (Sub)gradient of the metric with respect to the estimate.
Latent metric_gradient(const Latent& source, const Latent& estimate, FprMetric metric) {
    switch (metric) {
        case FprMetric::euclidean: {
            Latent g = sub(estimate, source);
            for (double& v : g.data) v *= 2.0;
            return g;
        }
        case FprMetric::l1: {
            Latent g = sub(estimate, source);
            for (double& v : g.data) v = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            return g;
        }
        case FprMetric::ssim:
            // d(1 - ssim)/d(estimate)
            return scaled(ssim_gradient_second(source, estimate, source_range(source)), -1.0);
    }
    throw DomainError("unknown fpr metric");
}

void validate(const FprConfig& cfg) {
    if (cfg.n_iters < 0) throw DomainError("fpr n_iters must be non-negative");
    if (cfg.n_iters > 0 && !(cfg.lambda > 0.0))
        throw DomainError("fpr lambda must be positive when iterating");
    if (!(cfg.omega >= -1.0)) throw DomainError("guidance scale must be >= -1");
}

}  // namespace

double fpr_loss(const Latent& source, const Latent& estimate, FprMetric metric) {
    require_same_shape(source, estimate, "fpr_loss");
    switch (metric) {
        case FprMetric::euclidean:
            return squared_norm(sub(estimate, source));
        case FprMetric::l1: {
            double acc = 0.0;
            for (std::size_t i = 0; i < source.size(); ++i)
                acc += std::abs(estimate.data[i] - source.data[i]);
            return acc;
        }
        case FprMetric::ssim:
            if (source.shape.size() != 2)
                throw MetricError("ssim metric needs a grid-shaped latent");
            return 1.0 - ssim(source, estimate, source_range(source));
    }
    throw DomainError("unknown fpr metric");
}

double fpr_objective(const ScoreBackend& backend, const Latent& source, const Latent& noisy,
                     const Condition& cond, double t, const FprConfig& cfg,
                     const NoiseSchedule& schedule) {
    Latent predicted = guided_score(backend, noisy, cond, t, cfg.omega);
    Latent estimate = posterior_mean(noisy, predicted, t, schedule);
    return fpr_loss(source, estimate, cfg.metric);
}

Latent fpr_gradient(const ScoreBackend& backend, const Latent& source, const Latent& noisy,
                    const Condition& cond, double t, const FprConfig& cfg,
                    const NoiseSchedule& schedule) {
    double alpha = alpha_at(schedule, t);
    if (alpha == 0.0) throw DomainError("fpr gradient undefined at alpha = 0");
    Latent predicted = guided_score(backend, noisy, cond, t, cfg.omega);
    Latent estimate = posterior_mean(noisy, predicted, t, schedule);
    Latent q = metric_gradient(source, estimate, cfg.metric);
    Latent pulled = guided_score_vjp(backend, noisy, cond, t, cfg.omega, q);
    return scaled(lincomb(1.0, q, -std::sqrt(1.0 - alpha), pulled), 1.0 / std::sqrt(alpha));
}

FprTrace fpr_refine(const ScoreBackend& backend, const Latent& source, const Condition& cond,
                    double t, const Latent& noise, const FprConfig& cfg,
                    const NoiseSchedule& schedule) {
    validate(cfg);
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("fpr_refine needs t in (0, 1]");
    require_same_shape(source, noise, "fpr_refine");

    double alpha = alpha_at(schedule, t);
    double noise_scale = std::sqrt(1.0 - alpha);

    FprTrace trace;
    trace.losses.reserve(cfg.n_iters);
    Latent noisy = forward_diffuse(source, noise, t, schedule);

    if (cfg.n_iters == 0) {
        // Strict no-op: hand back the inputs rather than running the noise
        // extraction, which would round the recovered noise by an ulp.
        trace.refined = noisy;
        trace.guided_noise = noise;
        trace.post_loss = fpr_objective(backend, source, noisy, cond, t, cfg, schedule);
        return trace;
    }

    Latent eps = noise;  // tracked state for the noise-update variant
    double initial_loss = 0.0;
    for (int iter = 0; iter < cfg.n_iters; ++iter) {
        Latent predicted = guided_score(backend, noisy, cond, t, cfg.omega);
        Latent estimate = posterior_mean(noisy, predicted, t, schedule);
        double loss = fpr_loss(source, estimate, cfg.metric);
        if (!std::isfinite(loss))
            throw DivergenceError("fpr loss became non-finite at iteration " + std::to_string(iter));
        if (iter == 0)
            initial_loss = loss;
        else if (initial_loss > 0.0 && loss > 1e6 * initial_loss)
            throw DivergenceError("fpr loss grew past 1e6x its initial value at iteration " +
                                  std::to_string(iter));
        trace.losses.push_back(loss);

        Latent q = metric_gradient(source, estimate, cfg.metric);
        Latent pulled = guided_score_vjp(backend, noisy, cond, t, cfg.omega, q);
        Latent grad = scaled(lincomb(1.0, q, -noise_scale, pulled), 1.0 / std::sqrt(alpha));

        if (cfg.update == FprUpdate::latent) {
            axpy(noisy, -cfg.lambda, grad);
        } else {
            // Chain rule through z_t = sqrt(a)*source + sqrt(1-a)*eps: the
            // gradient in eps is sqrt(1-a) times the latent gradient.
            axpy(eps, -cfg.lambda * noise_scale, grad);
            noisy = forward_diffuse(source, eps, t, schedule);
        }
        if (!noisy.all_finite())
            throw DivergenceError("fpr latent became non-finite at iteration " +
                                  std::to_string(iter));
    }

    trace.post_loss = fpr_objective(backend, source, noisy, cond, t, cfg, schedule);
    trace.refined = noisy;
    trace.guided_noise = extract_guided_noise(noisy, source, t, schedule);
    return trace;
}

Latent extract_guided_noise(const Latent& refined, const Latent& source, double t,
                            const NoiseSchedule& schedule) {
    require_same_shape(refined, source, "extract_guided_noise");
    double alpha = alpha_at(schedule, t);
    if (!(1.0 - alpha > 0.0))
        throw DomainError("guided noise undefined at t = 0 (zero noise scale)");
    double inv = 1.0 / std::sqrt(1.0 - alpha);
    return lincomb(inv, refined, -std::sqrt(alpha) * inv, source);
}

FprMetric fpr_metric_from_string(const std::string& name) {
    if (name == "euclidean") return FprMetric::euclidean;
    if (name == "l1") return FprMetric::l1;
    if (name == "ssim") return FprMetric::ssim;
    throw DomainError("unknown fpr metric '" + name + "'");
}

std::string to_string(FprMetric metric) {
    switch (metric) {
        case FprMetric::euclidean: return "euclidean";
        case FprMetric::l1: return "l1";
        case FprMetric::ssim: return "ssim";
    }
    return "?";
}

FprUpdate fpr_update_from_string(const std::string& name) {
    if (name == "latent") return FprUpdate::latent;
    if (name == "noise") return FprUpdate::noise;
    throw DomainError("unknown fpr update variant '" + name + "'");
}

std::string to_string(FprUpdate update) {
    return update == FprUpdate::latent ? "latent" : "noise";
}

}  // namespace sdlab
