#include "accel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace accel::scenario {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Synthetic initial-condition model (the naturalistic data behind the real
// scenario is not available). The exponential rate is calibrated by a
// 1e6-sample pilot so the event probability under the default SimConfig lands
// near 2e-3, inside [1e-4, 1e-2].
constexpr double kTtcInvRate = 22.0;     // s
constexpr double kRangeInvScale = 0.005; // 1/m
constexpr double kRangeInvShape = 2.5;

void validate_init(const LaneChangeInitial& init) {
    if (!(init.range > 0.0)) throw std::invalid_argument("scenario: initial range must be > 0");
    if (!(init.v >= 0.0)) throw std::invalid_argument("scenario: lead speed must be >= 0");
    if (!(init.ttc > 0.0)) throw std::invalid_argument("scenario: TTC must be positive or +inf");
}

// One episode; calls record(t, ego, lead, range, range_rate) per step and
// returns the minimum range. Both simulate() and min_range() run this exact
// loop so their numerics never diverge.
template <typename Recorder>
double run_episode(const LaneChangeInitial& init, const SimConfig& cfg, Recorder&& record) {
    validate_init(init);
    const double lead = init.v;
    const double rdot0 = std::isinf(init.ttc) ? 0.0 : -init.range / init.ttc;
    double ego = init.v - rdot0;
    double range = init.range;
    double rdot = lead - ego;

    record(0.0, ego, lead, range, rdot);
    double min_r = range;

    const auto steps = static_cast<long>(std::ceil(cfg.horizon / cfg.dt - 1e-12));
    for (long k = 1; k <= steps; ++k) {
        double accel;
        const double t_c = (rdot < 0.0) ? -range / rdot : kInf;
        if (cfg.aeb_ttc_trigger > 0.0 && t_c < cfg.aeb_ttc_trigger) {
            accel = -cfg.aeb_decel;
        } else {
            const double acc = cfg.acc_gain_spacing * (range - cfg.acc_time_headway * ego) +
                               cfg.acc_gain_speed * (lead - ego);
            accel = std::clamp(acc, cfg.accel_min, cfg.accel_max);
        }

        ego = std::max(0.0, ego + accel * cfg.dt);
        range += rdot * cfg.dt;
        rdot = lead - ego;

        const double t = k * cfg.dt;
        record(t, ego, lead, std::max(range, 0.0), rdot);
        min_r = std::min(min_r, std::max(range, 0.0));
        if (range <= 0.0) return 0.0;
    }
    return min_r;
}

}  // namespace

void validate(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("sim config: dt must be > 0");
    if (!(cfg.horizon >= cfg.dt)) throw std::invalid_argument("sim config: horizon must be >= dt");
    if (!(cfg.aeb_decel > 0.0)) throw std::invalid_argument("sim config: aeb_decel must be > 0");
    if (!(cfg.range_event_threshold > 0.0)) {
        throw std::invalid_argument("sim config: range_event_threshold must be > 0");
    }
    if (!(cfg.accel_max >= cfg.accel_min)) {
        throw std::invalid_argument("sim config: accel limits out of order");
    }
}

double ttc(double range, double range_rate) {
    if (!(range > 0.0)) throw std::invalid_argument("ttc: range must be > 0");
    if (range_rate >= 0.0) return kInf;
    return -range / range_rate;
}

LaneChangeInitial decode(const Eigen::VectorXd& x, double v) {
    if (x.size() != 2) throw std::invalid_argument("decode: expected x = [TTC^-1, R^-1]");
    const double ttc_inv = x[0];
    const double r_inv = x[1];
    if (!(r_inv > 0.0)) throw std::invalid_argument("decode: R^-1 must be > 0");
    if (!(ttc_inv >= 0.0)) throw std::invalid_argument("decode: TTC^-1 must be >= 0");
    LaneChangeInitial init;
    init.v = v;
    init.range = 1.0 / r_inv;
    init.ttc = (ttc_inv == 0.0) ? kInf : 1.0 / ttc_inv;
    return init;
}

Eigen::VectorXd encode(const LaneChangeInitial& init) {
    validate_init(init);
    Eigen::VectorXd x(2);
    x[0] = std::isinf(init.ttc) ? 0.0 : 1.0 / init.ttc;
    x[1] = 1.0 / init.range;
    return x;
}

Trajectory simulate(const LaneChangeInitial& init, const SimConfig& cfg) {
    validate(cfg);
    Trajectory traj;
    traj.samples.reserve(static_cast<std::size_t>(cfg.horizon / cfg.dt) + 2);
    traj.min_range = run_episode(init, cfg, [&](double t, double ego, double lead, double range,
                                                double range_rate) {
        traj.samples.push_back(TrajectorySample{t, ego, lead, range, range_rate});
    });
    return traj;
}

double min_range(const LaneChangeInitial& init, const SimConfig& cfg) {
    validate(cfg);
    return run_episode(init, cfg, [](double, double, double, double, double) {});
}

double indicator(const Eigen::VectorXd& x, double v, const SimConfig& cfg) {
    return (min_range(decode(x, v), cfg) < cfg.range_event_threshold) ? 1.0 : 0.0;
}

dist::Distribution natural_distribution() {
    dist::Product joint;
    joint.components.emplace_back(dist::Exponential{kTtcInvRate});
    joint.components.emplace_back(dist::Pareto{kRangeInvScale, kRangeInvShape});
    return dist::Distribution(std::move(joint));
}

}  // namespace accel::scenario
