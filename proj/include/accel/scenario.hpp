#pragma once

#include <Eigen/Core>
#include <vector>

#include "accel/distributions.hpp"

namespace accel::scenario {

// Initial condition of a lane-change cut-in: lead-vehicle speed v (m/s),
// range R (m) and time-to-collision TTC (s, +inf when the range is opening).
// For modeling the condition is encoded as x = [TTC^-1, R^-1].
struct LaneChangeInitial {
    double v = 10.0;
    double range = 50.0;
    double ttc = std::numeric_limits<double>::infinity();
};

// Ego controller and integration parameters. The ego follows a linear
// spacing/speed ACC law clamped to the acceleration limits, overridden by a
// constant hard brake whenever TTC drops below the trigger.
struct SimConfig {
    double dt = 0.01;                  // s
    double horizon = 10.0;             // s
    double acc_time_headway = 1.5;     // s
    double acc_gain_spacing = 0.1;     // 1/s^2
    double acc_gain_speed = 0.5;       // 1/s
    double aeb_ttc_trigger = 1.5;      // s; <= 0 disables the AEB
    double aeb_decel = 6.0;            // m/s^2, > 0
    double accel_min = -6.0;           // m/s^2
    double accel_max = 2.0;            // m/s^2
    double range_event_threshold = 2.0;  // m
};
void validate(const SimConfig& cfg);

struct TrajectorySample {
    double t;
    double ego_speed;
    double lead_speed;
    double range;
    double range_rate;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double min_range = 0.0;
};

// TTC = -R / Rdot; +inf for opening or constant range. Throws for R <= 0.
double ttc(double range, double range_rate);

// Reconstructs the initial condition from x = [TTC^-1, R^-1] and the lead
// speed; the ego's initial speed is v - Rdot.
LaneChangeInitial decode(const Eigen::VectorXd& x, double v);
Eigen::VectorXd encode(const LaneChangeInitial& init);

// Deterministic fixed-step simulation of the cut-in episode. Ends at the
// horizon or as soon as the range closes to zero (min_range 0).
Trajectory simulate(const LaneChangeInitial& init, const SimConfig& cfg);

// Minimum range only; identical stepping to simulate() without recording.
double min_range(const LaneChangeInitial& init, const SimConfig& cfg);

// Event indicator I{min range < threshold} as a 0/1 double.
double indicator(const Eigen::VectorXd& x, double v, const SimConfig& cfg);

// Synthetic stand-in for the naturalistic initial-condition model:
// independent TTC^-1 ~ exponential and R^-1 ~ Pareto marginals, with rates
// chosen so the event is rare (order 1e-3) under the default SimConfig.
dist::Distribution natural_distribution();

}  // namespace accel::scenario
