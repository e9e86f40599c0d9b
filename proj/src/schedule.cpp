#include "sdlab/schedule.hpp"

#include <cmath>

#include "sdlab/errors.hpp"

namespace sdlab {

double alpha_at(const NoiseSchedule& schedule, double t) {
    if (!(schedule.alpha_min >= 0.0 && schedule.alpha_min < 1.0))
        throw DomainError("schedule alpha_min must lie in [0, 1)");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("diffusion time must lie in [0, 1]");
    switch (schedule.kind) {
        case ScheduleKind::linear_alpha:
            return 1.0 - t * (1.0 - schedule.alpha_min);
        case ScheduleKind::cosine: {
            double c = std::cos(1.5707963267948966 * t);  // pi/2 * t
            return schedule.alpha_min + (1.0 - schedule.alpha_min) * c * c;
        }
    }
    throw DomainError("unknown schedule kind");
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "linear-alpha") return ScheduleKind::linear_alpha;
    if (name == "cosine") return ScheduleKind::cosine;
    throw DomainError("unknown schedule kind '" + name + "'");
}

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear_alpha ? "linear-alpha" : "cosine";
}

}  // namespace sdlab
