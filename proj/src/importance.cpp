#include "accel/importance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "accel/math.hpp"
#include "accel/parallel.hpp"

namespace accel::importance {

namespace {

est::ProbEstimate weighted_estimate(const Indicator& indicator, const dist::Distribution& f,
                                    const dist::Distribution& f_star, Eigen::Index n,
                                    const rng::RngStream& stream, int n_threads,
                                    est::Method method) {
    if (n < 1) throw std::invalid_argument("is_estimate: need n >= 1");
    const Eigen::MatrixXd points = dist::sample(f_star, stream, n);
    Eigen::VectorXd summands(n);
    Eigen::VectorXd log_ratios(n);
    par::parallel_for(n, n_threads, [&](std::int64_t i) {
        const Eigen::VectorXd x = points.row(i).transpose();
        const double log_ratio = dist::log_likelihood_ratio(f, f_star, x);
        log_ratios[i] = log_ratio;
        const double ind = indicator(x);
        summands[i] = (ind == 0.0) ? 0.0 : ind * std::exp(log_ratio);
    });
    est::ProbEstimate out = est::summarize(summands, method);
    out.max_log_ratio = log_ratios.maxCoeff();
    out.ratio_unstable = out.max_log_ratio > kLogRatioFlagThreshold;
    return out;
}

}  // namespace

est::ProbEstimate crude(const Indicator& indicator, const dist::Distribution& F, Eigen::Index n,
                        const rng::RngStream& stream, int n_threads) {
    if (n < 1) throw std::invalid_argument("crude: need n >= 1");
    const Eigen::MatrixXd points = dist::sample(F, stream, n);
    Eigen::VectorXd summands(n);
    par::parallel_for(n, n_threads, [&](std::int64_t i) {
        summands[i] = indicator(points.row(i).transpose());
    });
    return est::summarize(summands, est::Method::crude);
}

est::ProbEstimate is_estimate(const Indicator& indicator, const dist::Distribution& f,
                              const dist::Distribution& f_star, Eigen::Index n,
                              const rng::RngStream& stream, int n_threads) {
    return weighted_estimate(indicator, f, f_star, n, stream, n_threads, est::Method::is_crude);
}

est::ProbEstimate is_estimate_plugin(const kriging::KrigingModel& model, est::EventSpec spec,
                                     const dist::Distribution& f,
                                     const dist::Distribution& f_star, Eigen::Index n,
                                     const rng::RngStream& stream, int n_threads) {
    est::ProbEstimate out = weighted_estimate(
        [&](const Eigen::VectorXd& x) {
            return (model.predict(x).mean >= spec.gamma) ? 1.0 : 0.0;
        },
        f, f_star, n, stream, n_threads, est::Method::is_plugin);
    return out;
}

est::ProbEstimate is_estimate_expected(const kriging::KrigingModel& model, est::EventSpec spec,
                                       const dist::Distribution& f,
                                       const dist::Distribution& f_star, Eigen::Index n,
                                       const rng::RngStream& stream, int n_threads) {
    est::ProbEstimate out = weighted_estimate(
        [&](const Eigen::VectorXd& x) { return est::event_prob_pointwise(model, x, spec); }, f,
        f_star, n, stream, n_threads, est::Method::is_expected);
    return out;
}

}  // namespace accel::importance
