#include "relkd/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace relkd {

void RampSchedule::validate() const {
    if (t_start < 1 || t_start >= t_end) {
        throw std::invalid_argument("RampSchedule: need 1 <= t_start < t_end");
    }
    if (lambda_final < 0.0) {
        throw std::invalid_argument("RampSchedule: lambda_final must be >= 0");
    }
}

double ramp_weight(const RampSchedule& s, int t) {
    s.validate();
    if (t < s.t_start) {
        return 0.0;
    }
    if (t >= s.t_end) {
        return s.lambda_final;
    }
    const double frac = static_cast<double>(t - s.t_start) /
                        static_cast<double>(s.t_end - s.t_start);
    return 0.5 * s.lambda_final * (1.0 - std::cos(frac * std::numbers::pi));
}

double total_loss(double l_target, double l_coarse, double l_t2c, int t,
                  const RampSchedule& coarse_sched,
                  const RampSchedule& t2c_sched) {
    return l_target + ramp_weight(coarse_sched, t) * l_coarse +
           ramp_weight(t2c_sched, t) * l_t2c;
}

}  // namespace relkd
