#include <doctest.h>

#include <cmath>
#include <numbers>

#include "accel/kriging.hpp"
#include "oracles.hpp"

using namespace accel;
using kriging::DesignSet;
using kriging::KernelParams;
using kriging::KrigingModel;

namespace {

Eigen::VectorXd point1(double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    return v;
}

// Random design with a minimum pairwise separation, so the dense oracle and
// the factorization both stay well conditioned. The separation relaxes when a
// point cannot be placed, so dense designs still terminate.
DesignSet random_design(rng::RngStream& stream, Eigen::Index n, Eigen::Index d,
                        double min_separation = 0.15) {
    DesignSet design;
    design.X.resize(n, d);
    Eigen::Index placed = 0;
    double separation = min_separation;
    int attempts = 0;
    while (placed < n) {
        Eigen::VectorXd candidate(d);
        for (Eigen::Index k = 0; k < d; ++k) candidate[k] = stream.next_uniform();
        bool ok = true;
        for (Eigen::Index i = 0; i < placed && ok; ++i) {
            ok = (design.X.row(i).transpose() - candidate).norm() >= separation;
        }
        if (ok) {
            design.X.row(placed++) = candidate.transpose();
            attempts = 0;
        } else if (++attempts > 50) {
            separation *= 0.8;
            attempts = 0;
        }
    }
    design.Y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design.Y[i] = 2.0 * stream.next_uniform() - 1.0;
    }
    return design;
}

KernelParams random_params(rng::RngStream& stream) {
    KernelParams params;
    params.beta = 2.0 * stream.next_uniform() - 1.0;
    params.tau2 = 0.1 + 3.9 * stream.next_uniform();
    params.theta = 0.5 + 9.5 * stream.next_uniform();
    params.nugget = 0.0;
    return params;
}

}  // namespace

TEST_CASE("correlation closed forms and symmetry") {
    Eigen::VectorXd a = point1(0.3);
    CHECK(kriging::correlation(a, a, 7.3) == 1.0);
    CHECK(kriging::correlation(point1(0.0), point1(1.0), 1.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    Eigen::VectorXd p(2), q(2);
    p << 0.0, 0.0;
    q << 1.0, 1.0;
    CHECK(kriging::correlation(p, q, 1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));

    rng::RngStream stream(1);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd x(3), y(3);
        for (int k = 0; k < 3; ++k) {
            x[k] = stream.next_uniform();
            y[k] = stream.next_uniform();
        }
        const double theta = 0.1 + 20.0 * stream.next_uniform();
        CHECK(kriging::correlation(x, y, theta) == kriging::correlation(y, x, theta));
        CHECK(kriging::correlation(x, y, theta) > 0.0);
        CHECK(kriging::correlation(x, y, theta) <= 1.0);
    }

    CHECK_THROWS_AS(kriging::correlation(p, point1(0.0), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kriging::correlation(a, a, 0.0), std::invalid_argument);
}

TEST_CASE("fit_mean") {
    Eigen::VectorXd ones(3);
    ones << 1, 1, 1;
    CHECK(kriging::fit_mean(ones) == 1.0);
    Eigen::VectorXd pair(2);
    pair << 0, 1;
    CHECK(kriging::fit_mean(pair) == 0.5);
    Eigen::VectorXd spiked(5);
    spiked << 0, 0, 0, 0, 1;
    CHECK(kriging::fit_mean(spiked) == doctest::Approx(0.2));
    CHECK_THROWS_AS(kriging::fit_mean(Eigen::VectorXd(0)), std::invalid_argument);
}

TEST_CASE("log likelihood 1x1 cases by hand") {
    DesignSet design;
    design.X = Eigen::MatrixXd::Zero(1, 1);
    design.Y = Eigen::VectorXd::Zero(1);
    KernelParams params;  // beta=0, tau2=1, theta=1
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

    design.Y[0] = params.beta;  // quadratic term vanishes
    CHECK(kriging::log_likelihood(params, design) ==
          doctest::Approx(-half_log_2pi).epsilon(1e-12));

    design.Y[0] = params.beta + 1.0;
    CHECK(kriging::log_likelihood(params, design) ==
          doctest::Approx(-half_log_2pi - 0.5).epsilon(1e-12));
}

TEST_CASE("log likelihood matches the dense oracle") {
    rng::RngStream stream(17);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(stream.next_uniform() * 4);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(stream.next_uniform() * 3);
        const DesignSet design = random_design(stream, n, d);
        KernelParams params = random_params(stream);
        params.nugget = (rep % 3 == 0) ? 1e-6 : 0.0;
        CHECK(kriging::log_likelihood(params, design) ==
              doctest::Approx(oracles::dense_log_likelihood(params, design)).epsilon(1e-10));
    }
}

TEST_CASE("log likelihood reports the failing pivot") {
    DesignSet design;
    design.X.resize(2, 1);
    design.X << 0.4, 0.4;  // duplicate rows make R singular
    design.Y.resize(2);
    design.Y << 0.0, 1.0;
    KernelParams params;
    try {
        kriging::log_likelihood(params, design);
        FAIL("expected a factorization error");
    } catch (const kriging::FactorizationError& e) {
        CHECK(e.pivot() == 1);
    }
}

TEST_CASE("predict: single-point model hand values") {
    DesignSet design;
    design.X = Eigen::MatrixXd::Zero(1, 1);
    design.Y = Eigen::VectorXd::Ones(1);
    const KrigingModel model = KrigingModel::build(design, KernelParams{0.0, 1.0, 1.0, 0.0});

    const auto at_design = model.predict(point1(0.0));
    CHECK(at_design.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(at_design.variance == doctest::Approx(0.0));

    const auto away = model.predict(point1(1.0));
    CHECK(away.mean == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(away.variance == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("predict matches the dense conditional-gaussian oracle") {
    rng::RngStream stream(23);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(stream.next_uniform() * 5);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(stream.next_uniform() * 3);
        const DesignSet design = random_design(stream, n, d);
        const KernelParams params = random_params(stream);
        const KrigingModel model = KrigingModel::build(design, params);
        for (int q = 0; q < 4; ++q) {
            Eigen::VectorXd x(d);
            for (Eigen::Index k = 0; k < d; ++k) x[k] = 1.5 * stream.next_uniform() - 0.25;
            const auto fast = model.predict(x);
            const auto dense = oracles::dense_predict(design, params, x);
            CHECK(fast.mean == doctest::Approx(dense.mean).epsilon(1e-10));
            CHECK(std::abs(fast.variance - dense.variance) < 1e-10);
        }
    }
}

TEST_CASE("interpolation at design rows with nugget zero") {
    rng::RngStream stream(31);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(stream.next_uniform() * 3);
        // Point counts that keep a 0.15 separation feasible in [0,1]^d.
        const Eigen::Index n_max = (d == 1) ? 6 : 12;
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(stream.next_uniform() * (n_max - 2));
        const DesignSet design = random_design(stream, n, d);
        const KrigingModel model = KrigingModel::build(design, random_params(stream));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto p = model.predict(design.X.row(i).transpose());
            CHECK(std::abs(p.mean - design.Y[i]) < 1e-8);
            CHECK(p.variance < 1e-8);
        }
    }
}

TEST_CASE("variance is bounded by the process variance") {
    rng::RngStream stream(37);
    const DesignSet design = random_design(stream, 8, 2);
    KernelParams params = random_params(stream);
    params.nugget = 1e-6;
    const KrigingModel model = KrigingModel::build(design, params);
    for (int q = 0; q < 200; ++q) {
        Eigen::VectorXd x(2);
        x << 3.0 * stream.next_uniform() - 1.0, 3.0 * stream.next_uniform() - 1.0;
        const auto p = model.predict(x);
        CHECK(p.variance >= 0.0);
        CHECK(p.variance <= params.tau2 * (1.0 + params.nugget) + 1e-12);
    }
}

TEST_CASE("far from every design point the prior is returned") {
    rng::RngStream stream(41);
    const DesignSet design = random_design(stream, 5, 2);
    const KernelParams params{0.4, 2.5, 3.0, 0.0};
    const KrigingModel model = KrigingModel::build(design, params);
    Eigen::VectorXd x(2);
    x << 50.0, -40.0;  // all correlations far below 1e-12
    const auto p = model.predict(x);
    CHECK(p.mean == doctest::Approx(params.beta).epsilon(1e-12));
    CHECK(p.variance == doctest::Approx(params.tau2).epsilon(1e-12));
}

TEST_CASE("build rejects duplicates with nugget zero and factors with one") {
    DesignSet design;
    design.X.resize(2, 1);
    design.X << 0.25, 0.25;
    design.Y.resize(2);
    design.Y << 0.0, 1.0;
    CHECK_THROWS_AS(KrigingModel::build(design, KernelParams{}), std::invalid_argument);
    const KrigingModel model = KrigingModel::build(design, KernelParams{0.0, 1.0, 1.0, 1e-6});
    CHECK(model.predict(point1(0.25)).mean == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("build raises the nugget automatically when the factorization fails at zero") {
    DesignSet design;
    design.X.resize(3, 1);
    design.X << 0.0, 1e-13, 1.0;  // nearly coincident pair
    design.Y.resize(3);
    design.Y << 0.2, 0.2, 0.9;
    const KrigingModel model = KrigingModel::build(design, KernelParams{0.0, 1.0, 1.0, 0.0});
    CHECK(model.nugget_raised());
    CHECK(model.params().nugget > 0.0);

    // The same design with an explicit tiny nugget is a hard error.
    CHECK_THROWS_WITH_AS(KrigingModel::build(design, KernelParams{0.0, 1.0, 1.0, 1e-18}),
                         doctest::Contains("nugget"), kriging::FactorizationError);
}

TEST_CASE("factor reconstructs the regularized correlation matrix") {
    rng::RngStream stream(43);
    const DesignSet design = random_design(stream, 7, 2);
    KernelParams params = random_params(stream);
    params.nugget = 1e-8;
    const KrigingModel model = KrigingModel::build(design, params);
    const Eigen::MatrixXd reconstructed = model.factor() * model.factor().transpose();
    const Eigen::MatrixXd expected =
        oracles::dense_correlation(design.X, params.theta) +
        params.nugget * Eigen::MatrixXd::Identity(design.X.rows(), design.X.rows());
    CHECK((reconstructed - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update equals a full rebuild") {
    rng::RngStream stream(47);
    const DesignSet design = random_design(stream, 6, 2);
    const KernelParams params = random_params(stream);
    const KrigingModel model = KrigingModel::build(design, params);

    Eigen::VectorXd x_new(2);
    x_new << 0.21, 0.77;
    const double y_new = 0.4;
    const KrigingModel updated = model.update(x_new, y_new);
    CHECK(model.size() == 6);  // original untouched
    CHECK(updated.size() == 7);

    DesignSet extended;
    extended.X.resize(7, 2);
    extended.X.topRows(6) = design.X;
    extended.X.row(6) = x_new.transpose();
    extended.Y.resize(7);
    extended.Y.head(6) = design.Y;
    extended.Y[6] = y_new;
    const KrigingModel rebuilt = KrigingModel::build(extended, params);

    const auto at_new = updated.predict(x_new);
    CHECK(at_new.mean == doctest::Approx(y_new).epsilon(1e-10));
    CHECK(at_new.variance < 1e-10);

    for (int q = 0; q < 100; ++q) {
        Eigen::VectorXd x(2);
        x << 2.0 * stream.next_uniform() - 0.5, 2.0 * stream.next_uniform() - 0.5;
        const auto a = updated.predict(x);
        const auto b = rebuilt.predict(x);
        CHECK(std::abs(a.mean - b.mean) < 1e-9);
        CHECK(std::abs(a.variance - b.variance) < 1e-9);
    }
}

TEST_CASE("update at the prior mean keeps the interpolation of all other rows") {
    rng::RngStream stream(53);
    const DesignSet design = random_design(stream, 5, 1);
    const KrigingModel model = KrigingModel::build(design, KernelParams{0.0, 1.0, 4.0, 0.0});
    const Eigen::VectorXd x_new = point1(0.5 + 1e-3);
    const KrigingModel updated = model.update(x_new, model.predict(x_new).mean);
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        const auto p = updated.predict(design.X.row(i).transpose());
        CHECK(p.mean == doctest::Approx(design.Y[i]).epsilon(1e-8));
    }
}

TEST_CASE("update rejects duplicate rows with nugget zero") {
    DesignSet design;
    design.X.resize(2, 1);
    design.X << 0.0, 1.0;
    design.Y.resize(2);
    design.Y << 0.0, 1.0;
    const KrigingModel model = KrigingModel::build(design, KernelParams{});
    CHECK_THROWS_AS((void)model.update(point1(1.0), 0.3), std::invalid_argument);
}

TEST_CASE("mle recovers the length scale from synthetic draws") {
    const double true_theta = 10.0;
    KernelParams truth{0.0, 1.0, true_theta, 0.0};
    Eigen::MatrixXd X(60, 1);
    for (int i = 0; i < 60; ++i) X(i, 0) = static_cast<double>(i) / 59.0;

    int within_factor_two = 0;
    for (int rep = 0; rep < 20; ++rep) {
        rng::RngStream stream(1000 + rep);
        DesignSet design;
        design.X = X;
        design.Y = oracles::sample_grf(X, truth, stream);
        const kriging::MleResult fit = kriging::fit_mle(design, 1e-8);
        if (fit.params.theta >= true_theta / 2.0 && fit.params.theta <= true_theta * 2.0) {
            ++within_factor_two;
        }
    }
    CHECK(within_factor_two >= 18);
}

TEST_CASE("mle on constant responses pins tau2 at the lower bound and flags it") {
    DesignSet design;
    design.X.resize(4, 1);
    design.X << 0.0, 0.3, 0.6, 1.0;
    design.Y = Eigen::VectorXd::Constant(4, 2.5);
    const kriging::MleResult fit = kriging::fit_mle(design, 1e-8);
    CHECK(fit.tau2_at_bound);
    CHECK(fit.params.tau2 <= 1e-8 * 1.05);
    CHECK(fit.params.beta == doctest::Approx(2.5));
}

TEST_CASE("mle beats the probed grid and random parameter draws") {
    rng::RngStream stream(61);
    const DesignSet design = random_design(stream, 12, 1, 0.05);
    const double nugget = 1e-8;
    const kriging::MleResult fit = kriging::fit_mle(design, nugget);
    const double best = kriging::log_likelihood(fit.params, design);

    // Every grid point the search probed.
    for (int i = 0; i < 25; ++i) {
        for (int j = 0; j < 25; ++j) {
            KernelParams p = fit.params;
            p.theta = std::exp(std::log(1e-2) + (std::log(1e4) - std::log(1e-2)) * i / 24.0);
            p.tau2 = std::exp(std::log(1e-8) + (std::log(1e4) - std::log(1e-8)) * j / 24.0);
            CHECK(best >= kriging::log_likelihood(p, design) - 1e-9);
        }
    }

    // Ten random draws inside the search box.
    for (int r = 0; r < 10; ++r) {
        KernelParams p = fit.params;
        p.theta = std::exp(std::log(1e-2) + stream.next_uniform() * std::log(1e6));
        p.tau2 = std::exp(std::log(1e-8) + stream.next_uniform() * std::log(1e12));
        CHECK(best >= kriging::log_likelihood(p, design) - 1e-9);
    }
}

TEST_CASE("dense oracle agrees across the n=2 likelihood surface") {
    DesignSet design;
    design.X.resize(2, 1);
    design.X << -0.5, 0.5;
    design.Y.resize(2);
    design.Y << -1.0, 1.0;
    for (double theta : {0.1, 1.0, 10.0, 100.0}) {
        for (double tau2 : {0.01, 1.0, 100.0}) {
            const KernelParams p{kriging::fit_mean(design.Y), tau2, theta, 0.0};
            CHECK(kriging::log_likelihood(p, design) ==
                  doctest::Approx(oracles::dense_log_likelihood(p, design)).epsilon(1e-10));
        }
    }
}

TEST_CASE("normalized fitting stores the map and applies it on queries") {
    // Two very different column scales; fit_model maps both to [0,1].
    DesignSet design;
    design.X.resize(6, 2);
    design.X << 0.0, 0.0, 0.1, 1000.0, 0.2, 2000.0, 0.3, 3000.0, 0.4, 4000.0, 0.5, 5000.0;
    design.Y.resize(6);
    design.Y << 0.0, 0.1, 0.5, 0.9, 1.0, 1.0;
    const kriging::FittedModel fitted = kriging::fit_model(design, 1e-8);
    CHECK_FALSE(fitted.model.normalization().is_identity());

    // Interpolation still holds in raw coordinates.
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        const auto p = fitted.model.predict(design.X.row(i).transpose());
        CHECK(p.mean == doctest::Approx(design.Y[i]).epsilon(1e-5));
    }

    // Predictions equal an identity-normalization model built on the
    // manually rescaled design.
    DesignSet scaled = design;
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        scaled.X.row(i) =
            fitted.model.normalization().apply(design.X.row(i).transpose()).transpose();
    }
    const KrigingModel reference = KrigingModel::build(scaled, fitted.mle.params);
    Eigen::VectorXd x(2);
    x << 0.33, 1234.0;
    const auto a = fitted.model.predict(x);
    const auto b = reference.predict(fitted.model.normalization().apply(x));
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-12));
}
