#pragma once

#include "sdlab/latent.hpp"
#include "sdlab/rng.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab {

// z_t = sqrt(alpha(t)) * clean + sqrt(1 - alpha(t)) * noise
Latent forward_diffuse(const Latent& clean, const Latent& noise, double t,
                       const NoiseSchedule& schedule);

// Latent of iid standard normals; consumes draws from rng in element order.
Latent sample_gaussian(Rng& rng, const std::vector<int>& shape);

// Uniform draw in [t_min, t_max]; requires 0 <= t_min < t_max <= 1.
double sample_time(Rng& rng, double t_min, double t_max);

}  // namespace sdlab
