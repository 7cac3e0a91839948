#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <numbers>

namespace accel::math {

// Standard normal CDF via erfc; accurate deep into both tails.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Inverse standard normal CDF (Wichura's PPND16 rational approximation,
// relative error below 1e-15 on (0,1)).
double normal_quantile(double p);

// Gauss-Hermite rule for the physicists' weight exp(-t^2); weights sum to
// sqrt(pi). E[g(Y)] for Y ~ N(mu, sigma^2) is approximated by
//   sum_j weights[j]/sqrt(pi) * g(mu + sqrt(2)*sigma*nodes[j]).
struct GaussHermite {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
GaussHermite gauss_hermite(int n);

// Deterministic golden-section maximization of a unimodal function on
// [lo, hi]. Returns the best probed abscissa.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          int iterations = 80);

}  // namespace accel::math
