#include <doctest.h>

#include <cmath>
#include <vector>

#include "accel/distributions.hpp"
#include "oracles.hpp"

using namespace accel;
using dist::Distribution;

namespace {

Distribution product2(Distribution a, Distribution b) {
    dist::Product p;
    p.components.push_back(std::move(a));
    p.components.push_back(std::move(b));
    return Distribution(std::move(p));
}

Eigen::VectorXd point1(double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    return v;
}

}  // namespace

TEST_CASE("density values") {
    CHECK(dist::density1(Distribution(dist::Exponential{2.0}), 0.0) == doctest::Approx(2.0));
    CHECK(dist::density1(Distribution(dist::Exponential{2.0}), -0.5) == 0.0);
    // alpha * x_m^alpha / x^(alpha+1) = 2 * 1 / 8
    CHECK(dist::density1(Distribution(dist::Pareto{1.0, 2.0}), 2.0) == doctest::Approx(0.25));
    CHECK(dist::density1(Distribution(dist::Pareto{1.0, 2.0}), 0.5) == 0.0);
    CHECK(dist::density1(Distribution(dist::GaussianUV{0.0, 1.0}), 0.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
}

TEST_CASE("product density factorizes") {
    const Distribution joint =
        product2(Distribution(dist::Exponential{0.8}), Distribution(dist::Pareto{0.02, 2.5}));
    REQUIRE(joint.dim() == 2);
    rng::RngStream stream(7);
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x(2);
        x[0] = stream.next_uniform() * 3.0;
        x[1] = 0.02 + stream.next_uniform() * 0.5;
        const double expected = dist::density1(Distribution(dist::Exponential{0.8}), x[0]) *
                                dist::density1(Distribution(dist::Pareto{0.02, 2.5}), x[1]);
        CHECK(dist::density(joint, x) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("log density agrees with direct density") {
    const std::vector<Distribution> families = {Distribution(dist::Exponential{1.3}),
                                                Distribution(dist::Pareto{0.4, 3.0}),
                                                Distribution(dist::GaussianUV{-1.0, 2.0})};
    rng::RngStream stream(11);
    for (const auto& d : families) {
        for (int i = 0; i < 200; ++i) {
            const double x = dist::quantile1(d, stream.next_uniform());
            const double direct = dist::density1(d, x);
            if (direct > 1e-300) {
                CHECK(std::exp(dist::log_density(d, point1(x))) ==
                      doctest::Approx(direct).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("quantile closed forms") {
    CHECK(dist::quantile1(Distribution(dist::Exponential{1.0}), 0.5) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-14));
    CHECK(dist::quantile1(Distribution(dist::Pareto{1.0, 1.0}), 0.5) ==
          doctest::Approx(2.0).epsilon(1e-14));
    // quantile is the inverse of the cdf
    const Distribution pareto(dist::Pareto{0.3, 2.2});
    for (double u = 0.05; u < 1.0; u += 0.1) {
        CHECK(dist::cdf1(pareto, dist::quantile1(pareto, u)) == doctest::Approx(u).epsilon(1e-12));
    }
}

TEST_CASE("density integrates to one on the support") {
    // Simpson's rule over a truncation of each family's support.
    const auto integrate = [](const Distribution& d, double lo, double hi) {
        const int n = 20000;
        const double h = (hi - lo) / n;
        double sum = dist::density1(d, lo) + dist::density1(d, hi);
        for (int i = 1; i < n; ++i) {
            sum += dist::density1(d, lo + i * h) * ((i % 2) ? 4.0 : 2.0);
        }
        return sum * h / 3.0;
    };
    // The Pareto density is concentrated just above its scale; integrate in
    // log space so the peak is resolved.
    const auto integrate_log = [](const Distribution& d, double lo, double hi) {
        const int n = 20000;
        const double h = (std::log(hi) - std::log(lo)) / n;
        const auto g = [&](double t) { return dist::density1(d, std::exp(t)) * std::exp(t); };
        double sum = g(std::log(lo)) + g(std::log(hi));
        for (int i = 1; i < n; ++i) sum += g(std::log(lo) + i * h) * ((i % 2) ? 4.0 : 2.0);
        return sum * h / 3.0;
    };
    const Distribution expo(dist::Exponential{0.8});
    const Distribution pareto(dist::Pareto{0.02, 2.5});
    const Distribution gauss(dist::GaussianUV{1.0, 0.5});
    CHECK(integrate(expo, 0.0, 60.0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(integrate_log(pareto, 0.02, 1e9) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(integrate(gauss, -7.0, 9.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sampling is reproducible and shard-stable") {
    const Distribution joint =
        product2(Distribution(dist::Exponential{2.0}), Distribution(dist::GaussianUV{0.0, 1.0}));
    const rng::RngStream stream(123);
    const Eigen::MatrixXd a = dist::sample(joint, stream, 50);
    const Eigen::MatrixXd b = dist::sample(joint, stream, 50);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // Growing the batch never changes earlier samples.
    const Eigen::MatrixXd c = dist::sample(joint, stream, 80);
    CHECK((c.topRows(50) - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empirical mean of exponential draws matches 1/rate") {
    const Distribution expo(dist::Exponential{2.0});
    const Eigen::Index n = 100000;
    const Eigen::MatrixXd draws = dist::sample(expo, rng::RngStream(99), n);
    const double mean = draws.col(0).mean();
    const double sd = std::sqrt(oracles::sample_variance(draws.col(0)));
    CHECK(std::abs(mean - 0.5) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("samplers pass a KS test against the analytic cdf") {
    const Eigen::Index n = 10000;
    const double critical = 1.6276 / std::sqrt(static_cast<double>(n));  // alpha = 0.01
    const std::vector<Distribution> families = {Distribution(dist::Exponential{1.7}),
                                                Distribution(dist::Pareto{0.5, 2.0}),
                                                Distribution(dist::GaussianUV{0.3, 1.2})};
    int seed = 2024;
    for (const auto& d : families) {
        const Eigen::MatrixXd draws = dist::sample(d, rng::RngStream(seed++), n);
        std::vector<double> values(draws.col(0).data(), draws.col(0).data() + n);
        const double stat = oracles::ks_statistic(values, [&](double x) { return dist::cdf1(d, x); });
        CHECK(stat < critical);
    }
}

TEST_CASE("likelihood ratio") {
    const Distribution f(dist::Exponential{1.0});
    const Distribution g(dist::Exponential{2.0});
    // (e^-1) / (2 e^-2) = e / 2
    CHECK(dist::likelihood_ratio(f, g, point1(1.0)) ==
          doctest::Approx(std::numbers::e / 2.0).epsilon(1e-12));

    // f = f_star: exactly one everywhere in the support.
    rng::RngStream stream(5);
    for (int i = 0; i < 50; ++i) {
        const double x = dist::quantile1(f, stream.next_uniform());
        CHECK(dist::likelihood_ratio(f, f, point1(x)) == 1.0);
    }

    // Outside f's support but inside f_star's: ratio 0.
    const Distribution pareto(dist::Pareto{1.0, 2.0});
    CHECK(dist::likelihood_ratio(pareto, f, point1(0.5)) == 0.0);

    // f_star vanishing where f does not is an error naming the point.
    CHECK_THROWS_WITH_AS(dist::likelihood_ratio(f, pareto, point1(0.5)),
                         doctest::Contains("0.5"), std::domain_error);
}

TEST_CASE("distribution spec parsing round-trips") {
    const Distribution d = dist::parse("product [ exponential rate=0.8, pareto scale=0.02 shape=2.5 ]");
    REQUIRE(d.dim() == 2);
    const Distribution again = dist::parse(dist::format(d));
    Eigen::VectorXd x(2);
    x << 0.9, 0.05;
    CHECK(dist::density(d, x) == dist::density(again, x));

    CHECK_THROWS_AS(dist::parse("exponential rate=-1"), std::invalid_argument);
    CHECK_THROWS_AS(dist::parse("triangular a=0 b=1"), std::invalid_argument);
    CHECK_THROWS_AS(dist::parse("pareto scale=0.1"), std::invalid_argument);
    CHECK_THROWS_AS(dist::parse("product [ exponential rate=1"), std::invalid_argument);
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(Distribution(dist::Exponential{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution(dist::Pareto{-0.1, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution(dist::GaussianUV{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution(dist::Product{}), std::invalid_argument);
}
