#pragma once

#include <Eigen/Core>
#include <vector>

#include "accel/distributions.hpp"
#include "accel/importance.hpp"
#include "accel/rng.hpp"

namespace accel::ce {

// Indicator-weighted sample weights w_i = I_i * f(x_i) / f_theta_s(x_i).
// The indicator slot accepts hard {0,1} values or expected-indicator values
// in [0,1]; an all-zero vector signals no event hits.
Eigen::VectorXd ce_weights(const Eigen::VectorXd& indicator_values, const dist::Distribution& f,
                           const dist::Distribution& f_theta_s, const Eigen::MatrixXd& samples);

// Closed-form maximizers of the weighted log-likelihood for each family.
double ce_update_exponential(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights);
double ce_update_pareto(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights,
                        double scale);
dist::GaussianUV ce_update_gaussian(const Eigen::VectorXd& samples,
                                    const Eigen::VectorXd& weights);

// Sampled cross-entropy objective (1/N) sum_i w_i * ln f_theta(x_i).
double ce_objective(const dist::Distribution& f_theta, const Eigen::MatrixXd& samples,
                    const Eigen::VectorXd& weights);

struct CEOptions {
    Eigen::Index n_per_iter = 500;
    int max_iter = 10;
    double tol = 1e-3;        // max relative parameter change to stop
    double smoothing = 0.7;   // theta_new = s*theta_star + (1-s)*theta_s; 1.0 disables
    int n_threads = 1;
};

struct CEIteration {
    dist::Distribution theta;  // parameters carried into the next iteration
    double objective;          // sampled objective at those parameters
    Eigen::Index hits;         // samples with a nonzero indicator value
    Eigen::Index n_used;       // samples drawn (4x n_per_iter after a zero-hit retry)
};

struct CEState {
    dist::Distribution theta_s;
    int iteration = 0;
    Eigen::Index n_per_iter = 0;
    std::vector<CEIteration> history;  // one entry per iteration
    bool converged = false;
};

// Iterates the cross-entropy update from theta0 (a product of exponential,
// Pareto, and Gaussian marginals with closed-form updates; Pareto scales stay
// fixed). An iteration with zero hits retries once with 4x the sample count
// before giving up. The resulting theta_s is usable as an importance-sampling
// distribution for f.
CEState ce_iterate(const importance::Indicator& indicator, const dist::Distribution& f,
                   const dist::Distribution& theta0, const CEOptions& options,
                   const rng::RngStream& stream);

}  // namespace accel::ce
