#pragma once

namespace relkd {

/// Piecewise cosine warm-up: 0 before t_start, ramps to lambda_final at
/// t_end, constant after.
struct RampSchedule {
    int t_start = 30;
    int t_end = 60;
    double lambda_final = 0.5;

    void validate() const;  // throws std::invalid_argument
};

double ramp_weight(const RampSchedule& s, int t);

double total_loss(double l_target, double l_coarse, double l_t2c, int t,
                  const RampSchedule& coarse_sched,
                  const RampSchedule& t2c_sched);

}  // namespace relkd
