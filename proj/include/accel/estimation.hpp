#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

#include "accel/distributions.hpp"
#include "accel/kriging.hpp"
#include "accel/rng.hpp"

namespace accel::est {

// Event threshold on the response; the indicator convention is I{y >= gamma}
// everywhere, with ties resolved to 1.
struct EventSpec {
    double gamma = 0.5;
};

enum class Method { crude, plugin, expected, is_crude, is_plugin, is_expected };
std::string_view method_name(Method m);

struct ProbEstimate {
    double value = 0.0;      // in [0, 1]
    double std_error = 0.0;  // sample sd of the per-sample summands / sqrt(n)
    std::uint64_t n_samples = 0;
    Method method = Method::crude;
    // Importance-sampling diagnostics; NaN/false for plain Monte Carlo.
    double max_log_ratio = std::numeric_limits<double>::quiet_NaN();
    bool ratio_unstable = false;
};

// Builds a ProbEstimate from per-sample summands (mean, std error, clamping
// the value into [0,1]); reduction is serial in index order.
ProbEstimate summarize(const Eigen::VectorXd& summands, Method method);

// P(y(x) >= gamma) under the Kriging predictive distribution:
// 1 - Phi((gamma - mu)/sigma), degenerating to the hard indicator at sigma=0.
double event_prob_pointwise(const kriging::KrigingModel& model, const Eigen::VectorXd& x,
                            EventSpec spec);

// Monte-Carlo estimate of P(x in event) with the hard-thresholded predictive
// mean as the indicator.
ProbEstimate estimate_prob_plugin(const kriging::KrigingModel& model, EventSpec spec,
                                  const dist::Distribution& F, Eigen::Index n,
                                  const rng::RngStream& stream, int n_threads = 1);

// Same integral with the expected indicator 1 - Phi((gamma - mu)/sigma).
ProbEstimate estimate_prob_expected(const kriging::KrigingModel& model, EventSpec spec,
                                    const dist::Distribution& F, Eigen::Index n,
                                    const rng::RngStream& stream, int n_threads = 1);

}  // namespace accel::est
