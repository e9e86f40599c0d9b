#include "sdlab/diffusion.hpp"

#include <cmath>

#include "sdlab/errors.hpp"

namespace sdlab {

Latent forward_diffuse(const Latent& clean, const Latent& noise, double t,
                       const NoiseSchedule& schedule) {
    require_same_shape(clean, noise, "forward_diffuse");
    double alpha = alpha_at(schedule, t);
    return lincomb(std::sqrt(alpha), clean, std::sqrt(1.0 - alpha), noise);
}

Latent sample_gaussian(Rng& rng, const std::vector<int>& shape) {
    Latent out = Latent::zeros(shape);
    for (double& v : out.data) v = rng.next_gaussian();
    return out;
}

double sample_time(Rng& rng, double t_min, double t_max) {
    if (!(t_min >= 0.0 && t_min < t_max && t_max <= 1.0))
        throw DomainError("time range must satisfy 0 <= t_min < t_max <= 1");
    return t_min + (t_max - t_min) * rng.next_unit();
}

}  // namespace sdlab
