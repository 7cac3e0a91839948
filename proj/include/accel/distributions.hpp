#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "accel/rng.hpp"

namespace accel::dist {

struct Exponential {
    double rate;  // lambda > 0
};

struct Pareto {
    double scale;  // x_m > 0, support [x_m, inf)
    double shape;  // alpha > 0
};

struct GaussianUV {
    double mean;
    double sd;  // > 0
};

class Distribution;

struct Product {
    std::vector<Distribution> components;
};

// Immutable parametric distribution: density/sampler/log-density family used
// for the natural distribution, importance-sampling distributions, and the
// cross-entropy family. Scalar families have dimension 1; Product stacks its
// components into one vector coordinate per scalar marginal.
class Distribution {
public:
    Distribution(Exponential e);
    Distribution(Pareto p);
    Distribution(GaussianUV g);
    Distribution(Product p);

    [[nodiscard]] Eigen::Index dim() const;
    [[nodiscard]] const std::variant<Exponential, Pareto, GaussianUV, Product>& value() const {
        return value_;
    }

private:
    std::variant<Exponential, Pareto, GaussianUV, Product> value_;
};

double density(const Distribution& d, const Eigen::VectorXd& x);
// -inf outside the support.
double log_density(const Distribution& d, const Eigen::VectorXd& x);

// Scalar-family helpers (throw for Product).
double density1(const Distribution& d, double x);
double cdf1(const Distribution& d, double x);
// Inverse CDF at u in (0, 1); the sampler for every family.
double quantile1(const Distribution& d, double u);

// n samples, one row each. Sample i consumes its own substream(i), so batches
// are reproducible under any sharding and adding samples never shifts others.
Eigen::MatrixXd sample(const Distribution& d, const rng::RngStream& stream, Eigen::Index n);

// dF/dF* at x, computed through log densities. Returns 0 where f has no
// density; throws if f_star vanishes at a point where f does not.
double likelihood_ratio(const Distribution& f, const Distribution& f_star,
                        const Eigen::VectorXd& x);
double log_likelihood_ratio(const Distribution& f, const Distribution& f_star,
                            const Eigen::VectorXd& x);

// Config-file syntax: `exponential rate=0.8`, `pareto scale=0.02 shape=2.5`,
// `gaussian mean=0 sd=1`, `product [ <entry>, <entry> ]`.
Distribution parse(std::string_view text);
std::string format(const Distribution& d);

}  // namespace accel::dist
