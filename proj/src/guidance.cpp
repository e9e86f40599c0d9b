#include "sdlab/guidance.hpp"

#include "sdlab/errors.hpp"

namespace sdlab {

Latent cfg_combine(const Latent& cond_pred, const Latent& uncond_pred, double omega) {
    return lincomb(1.0 + omega, cond_pred, -omega, uncond_pred);
}

Latent guided_score(const ScoreBackend& backend, const Latent& noisy, const Condition& cond,
                    double t, double omega) {
    if (cond.is_null()) throw ConditionError("guided_score needs a concrete label");
    Latent with_label = backend.score(noisy, cond, t);
    Latent without = backend.score(noisy, Condition::null(), t);
    return cfg_combine(with_label, without, omega);
}

Latent guided_score_vjp(const ScoreBackend& backend, const Latent& noisy, const Condition& cond,
                        double t, double omega, const Latent& cotangent) {
    if (cond.is_null()) throw ConditionError("guided_score_vjp needs a concrete label");
    Latent with_label = backend.score_vjp(noisy, cond, t, cotangent);
    Latent without = backend.score_vjp(noisy, Condition::null(), t, cotangent);
    return cfg_combine(with_label, without, omega);
}

}  // namespace sdlab
