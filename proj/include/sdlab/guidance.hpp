#pragma once

#include "sdlab/backend.hpp"
#include "sdlab/latent.hpp"

namespace sdlab {

// Classifier-free combination of a conditional and an unconditional noise
// prediction: (1 + omega) * cond - omega * uncond. omega = 0 returns the
// conditional prediction unchanged; large omega amplifies the direction the
// label adds on top of the unconditional model.
Latent cfg_combine(const Latent& cond_pred, const Latent& uncond_pred, double omega);

// Guided noise prediction: runs the backend under the label and under the null
// token and combines the two. The condition must be a concrete label.
Latent guided_score(const ScoreBackend& backend, const Latent& noisy, const Condition& cond,
                    double t, double omega);

// Pullback of a cotangent through guided_score with respect to the latent:
// the same linear combination applied to the two per-condition pullbacks.
Latent guided_score_vjp(const ScoreBackend& backend, const Latent& noisy, const Condition& cond,
                        double t, double omega, const Latent& cotangent);

}  // namespace sdlab
