#pragma once

#include <Eigen/Core>
#include <functional>

#include "accel/distributions.hpp"
#include "accel/estimation.hpp"
#include "accel/kriging.hpp"
#include "accel/rng.hpp"

namespace accel::importance {

// Black-box event indicator; returns values in [0, 1] ({0, 1} for real
// simulators). Must be safe to call concurrently unless the caller wraps it.
using Indicator = std::function<double(const Eigen::VectorXd&)>;

// Runs whose max log likelihood ratio exceeds this are flagged as potentially
// unstable (heavy-tail diagnostic), never rejected.
inline constexpr double kLogRatioFlagThreshold = 30.0;

// Crude Monte Carlo under F: sample mean of the indicator.
est::ProbEstimate crude(const Indicator& indicator, const dist::Distribution& F, Eigen::Index n,
                        const rng::RngStream& stream, int n_threads = 1);

// Importance sampling with the black-box indicator: samples from f_star,
// averages indicator * dF/dF*. Ratios are computed in log space.
est::ProbEstimate is_estimate(const Indicator& indicator, const dist::Distribution& f,
                              const dist::Distribution& f_star, Eigen::Index n,
                              const rng::RngStream& stream, int n_threads = 1);

// Same estimator with the indicator replaced by the hard-thresholded
// predictive mean; no simulator calls.
est::ProbEstimate is_estimate_plugin(const kriging::KrigingModel& model, est::EventSpec spec,
                                     const dist::Distribution& f,
                                     const dist::Distribution& f_star, Eigen::Index n,
                                     const rng::RngStream& stream, int n_threads = 1);

// Same estimator with the expected indicator 1 - Phi((gamma - mu)/sigma).
est::ProbEstimate is_estimate_expected(const kriging::KrigingModel& model, est::EventSpec spec,
                                       const dist::Distribution& f,
                                       const dist::Distribution& f_star, Eigen::Index n,
                                       const rng::RngStream& stream, int n_threads = 1);

}  // namespace accel::importance
