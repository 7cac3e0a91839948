#include <doctest.h>

#include <cmath>

#include "accel/importance.hpp"
#include "oracles.hpp"

using namespace accel;
using dist::Distribution;
using est::EventSpec;
using kriging::DesignSet;
using kriging::KernelParams;
using kriging::KrigingModel;

namespace {

const double kGaussianTail3 = 1.0 - math::normal_cdf(3.0);  // 1.349898e-3

importance::Indicator above(double cut) {
    return [cut](const Eigen::VectorXd& x) { return x[0] > cut ? 1.0 : 0.0; };
}

}  // namespace

TEST_CASE("with f_star = f importance sampling equals crude Monte Carlo") {
    const Distribution f(dist::Exponential{1.0});
    const rng::RngStream stream(11);
    const auto is = importance::is_estimate(above(1.0), f, f, 2000, stream);
    const auto mc = importance::crude(above(1.0), f, 2000, stream);
    CHECK(is.value == mc.value);
    CHECK(is.std_error == mc.std_error);
    CHECK(is.method == est::Method::is_crude);
    CHECK(mc.method == est::Method::crude);
}

TEST_CASE("gaussian tail with a mean-shifted proposal") {
    const Distribution f(dist::GaussianUV{0.0, 1.0});
    const Distribution f_star(dist::GaussianUV{3.0, 1.0});
    const auto e = importance::is_estimate(above(3.0), f, f_star, 10000, rng::RngStream(42));
    CHECK(std::abs(e.value - kGaussianTail3) < 3.0 * e.std_error);
    CHECK(e.std_error > 0.0);
    CHECK_FALSE(e.ratio_unstable);
    CHECK(std::isfinite(e.max_log_ratio));
}

TEST_CASE("identically zero indicator") {
    const Distribution f(dist::GaussianUV{0.0, 1.0});
    const auto e = importance::is_estimate([](const Eigen::VectorXd&) { return 0.0; }, f, f, 100,
                                           rng::RngStream(1));
    CHECK(e.value == 0.0);
    CHECK(e.std_error == 0.0);
}

TEST_CASE("max log ratio diagnostic matches a direct recomputation") {
    const Distribution f(dist::Exponential{1.0});
    const Distribution f_star(dist::Exponential{2.5});
    const Eigen::Index n = 500;
    const rng::RngStream stream(77);
    const auto e = importance::is_estimate(above(2.0), f, f_star, n, stream);

    const Eigen::MatrixXd points = dist::sample(f_star, stream, n);
    double max_log = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        max_log = std::max(max_log,
                           dist::log_likelihood_ratio(f, f_star, points.row(i).transpose()));
    }
    CHECK(e.max_log_ratio == doctest::Approx(max_log));
    CHECK_FALSE(e.ratio_unstable);  // Markov: P(log ratio > 30) < e^-30 per draw
}

TEST_CASE("statistical unbiasedness over replications") {
    const Distribution f(dist::GaussianUV{0.0, 1.0});
    const Distribution f_star(dist::GaussianUV{3.0, 1.0});
    const int reps = 200;
    Eigen::VectorXd values(reps);
    for (int r = 0; r < reps; ++r) {
        values[r] =
            importance::is_estimate(above(3.0), f, f_star, 10000, rng::RngStream(5000 + r)).value;
    }
    const double mean = values.mean();
    const double sd = std::sqrt(oracles::sample_variance(values));
    CHECK(std::abs(mean - kGaussianTail3) < 3.0 * sd / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("variance reduction on the gaussian tail toy") {
    const Distribution f(dist::GaussianUV{0.0, 1.0});
    const Distribution f_star(dist::GaussianUV{3.0, 1.0});

    // Stable crude reference at n = 1e6: summand variance p(1-p).
    const auto mc = importance::crude(above(3.0), f, 1000000, rng::RngStream(300));
    const double var_crude = mc.std_error * mc.std_error * 1e6;

    const auto is = importance::is_estimate(above(3.0), f, f_star, 10000, rng::RngStream(301));
    const double var_is = is.std_error * is.std_error * 1e4;
    CHECK(var_crude >= 10.0 * var_is);
}

TEST_CASE("plugin route equals the true route when the surrogate agrees everywhere") {
    // Step response sampled on a grid whose midpoint matches the true cut, so
    // the surrogate's thresholded mean reproduces the indicator exactly.
    const double cut = 0.275;
    DesignSet design;
    design.X.resize(21, 1);
    design.Y.resize(21);
    for (int i = 0; i < 21; ++i) {
        design.X(i, 0) = 0.05 * i;
        design.Y[i] = design.X(i, 0) >= cut ? 1.0 : 0.0;
    }
    const KrigingModel model = KrigingModel::build(design, KernelParams{0.0, 0.01, 500.0, 0.0});
    const EventSpec spec{0.5};
    const Distribution f(dist::GaussianUV{0.3, 0.2});
    const Distribution f_star(dist::GaussianUV{0.45, 0.25});
    const Eigen::Index n = 2000;
    const rng::RngStream stream(13);

    // Precondition: agreement on every sampled point of this run.
    const Eigen::MatrixXd points = dist::sample(f_star, stream, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double truth = points(i, 0) >= cut ? 1.0 : 0.0;
        const double plugin = model.predict(points.row(i).transpose()).mean >= spec.gamma;
        REQUIRE(plugin == truth);
    }

    const auto via_sim = importance::is_estimate(
        [&](const Eigen::VectorXd& x) { return x[0] >= cut ? 1.0 : 0.0; }, f, f_star, n, stream);
    const auto via_model = importance::is_estimate_plugin(model, spec, f, f_star, n, stream);
    CHECK(via_model.value == via_sim.value);
    CHECK(via_model.std_error == via_sim.std_error);
    CHECK(via_model.method == est::Method::is_plugin);
}

TEST_CASE("expected route degenerates to the plugin route at tiny tau2") {
    DesignSet design;
    design.X.resize(4, 1);
    design.X << 0.0, 0.35, 0.65, 1.0;
    design.Y.resize(4);
    design.Y << 0.0, 0.0, 1.0, 1.0;
    const Distribution f(dist::GaussianUV{0.4, 0.2});
    const Distribution f_star(dist::GaussianUV{0.6, 0.2});
    const rng::RngStream stream(17);

    // sigma == 0 to machine precision: both integrands are the hard indicator.
    const KrigingModel hard = KrigingModel::build(design, KernelParams{0.0, 1e-12, 4.0, 0.0});
    const auto a = importance::is_estimate_plugin(hard, EventSpec{0.5}, f, f_star, 800, stream);
    const auto b = importance::is_estimate_expected(hard, EventSpec{0.5}, f, f_star, 800, stream);
    CHECK(a.value == b.value);

    const KrigingModel small = KrigingModel::build(design, KernelParams{0.0, 1e-6, 4.0, 0.0});
    const auto c = importance::is_estimate_plugin(small, EventSpec{0.5}, f, f_star, 800, stream);
    const auto d = importance::is_estimate_expected(small, EventSpec{0.5}, f, f_star, 800, stream);
    CHECK(std::abs(c.value - d.value) < 1e-3 * c.value);
}

TEST_CASE("constant pointwise probability passes straight through") {
    // Far-away design: mu = beta, sigma = sqrt(tau2) everywhere F samples.
    DesignSet design;
    design.X = Eigen::MatrixXd::Constant(1, 1, 500.0);
    design.Y = Eigen::VectorXd::Constant(1, 1.0);
    const KrigingModel model = KrigingModel::build(design, KernelParams{0.3, 0.04, 1.0, 0.0});
    const Distribution f(dist::GaussianUV{0.0, 1.0});
    const double p = 1.0 - math::normal_cdf((0.5 - 0.3) / 0.2);
    const auto e = importance::is_estimate_expected(model, EventSpec{0.5}, f, f, 400,
                                                    rng::RngStream(23));
    CHECK(e.value == doctest::Approx(p).epsilon(1e-12));
    CHECK(e.std_error == doctest::Approx(0.0));
}

TEST_CASE("importance sampling runs are deterministic across pool sizes") {
    const Distribution f(dist::GaussianUV{0.0, 1.0});
    const Distribution f_star(dist::GaussianUV{2.0, 1.0});
    const rng::RngStream stream(29);
    const auto a = importance::is_estimate(above(2.0), f, f_star, 3000, stream, 1);
    const auto b = importance::is_estimate(above(2.0), f, f_star, 3000, stream, 8);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.max_log_ratio == b.max_log_ratio);
}
