#pragma once

#include <string>

namespace sdlab {

// Continuous-time signal schedule on t in [0, 1]. alpha_at reports the signal
// fraction alpha(t): the diffused latent is
//   z_t = sqrt(alpha) * z0 + sqrt(1 - alpha) * eps.
// Both kinds run from alpha(0) = 1 (clean) down to alpha(1) = alpha_min and are
// strictly decreasing in between:
//   linear-alpha: alpha(t) = 1 - t * (1 - alpha_min)
//   cosine:       alpha(t) = alpha_min + (1 - alpha_min) * cos^2(pi*t/2)
enum class ScheduleKind { linear_alpha, cosine };

struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::linear_alpha;
    double alpha_min = 0.01;  // in [0, 1); 0 is allowed and makes alpha(1) = 0
};

// Throws DomainError for t outside [0,1] or a schedule with alpha_min outside [0,1).
double alpha_at(const NoiseSchedule& schedule, double t);

ScheduleKind schedule_kind_from_string(const std::string& name);
std::string to_string(ScheduleKind kind);

}  // namespace sdlab
