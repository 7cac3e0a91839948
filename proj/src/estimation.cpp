#include "accel/estimation.hpp"

#include <cmath>
#include <stdexcept>

#include "accel/math.hpp"
#include "accel/parallel.hpp"

namespace accel::est {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::crude: return "crude";
        case Method::plugin: return "plugin";
        case Method::expected: return "expected";
        case Method::is_crude: return "is-crude";
        case Method::is_plugin: return "is-plugin";
        case Method::is_expected: return "is-expected";
    }
    return "unknown";
}

ProbEstimate summarize(const Eigen::VectorXd& summands, Method method) {
    const Eigen::Index n = summands.size();
    if (n < 1) throw std::invalid_argument("summarize: need at least one summand");
    const double mean = summands.mean();
    double sd = 0.0;
    if (n > 1) {
        sd = std::sqrt((summands.array() - mean).square().sum() / static_cast<double>(n - 1));
    }
    ProbEstimate out;
    out.value = std::clamp(mean, 0.0, 1.0);
    out.std_error = sd / std::sqrt(static_cast<double>(n));
    out.n_samples = static_cast<std::uint64_t>(n);
    out.method = method;
    return out;
}

double event_prob_pointwise(const kriging::KrigingModel& model, const Eigen::VectorXd& x,
                            EventSpec spec) {
    const kriging::Prediction p = model.predict(x);
    const double sigma = std::sqrt(p.variance);
    if (sigma == 0.0) return (p.mean >= spec.gamma) ? 1.0 : 0.0;
    return 1.0 - math::normal_cdf((spec.gamma - p.mean) / sigma);
}

namespace {

template <typename Summand>
ProbEstimate monte_carlo(const dist::Distribution& F, Eigen::Index n,
                         const rng::RngStream& stream, int n_threads, Method method,
                         Summand&& summand) {
    if (n < 1) throw std::invalid_argument("estimate: need n >= 1");
    const Eigen::MatrixXd points = dist::sample(F, stream, n);
    Eigen::VectorXd values(n);
    par::parallel_for(n, n_threads, [&](std::int64_t i) {
        values[i] = summand(points.row(i).transpose());
    });
    return summarize(values, method);
}

}  // namespace

ProbEstimate estimate_prob_plugin(const kriging::KrigingModel& model, EventSpec spec,
                                  const dist::Distribution& F, Eigen::Index n,
                                  const rng::RngStream& stream, int n_threads) {
    return monte_carlo(F, n, stream, n_threads, Method::plugin, [&](const Eigen::VectorXd& x) {
        return (model.predict(x).mean >= spec.gamma) ? 1.0 : 0.0;
    });
}

ProbEstimate estimate_prob_expected(const kriging::KrigingModel& model, EventSpec spec,
                                    const dist::Distribution& F, Eigen::Index n,
                                    const rng::RngStream& stream, int n_threads) {
    return monte_carlo(F, n, stream, n_threads, Method::expected, [&](const Eigen::VectorXd& x) {
        return event_prob_pointwise(model, x, spec);
    });
}

}  // namespace accel::est
