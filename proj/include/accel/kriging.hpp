#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <stdexcept>

namespace accel::kriging {

// Constant-mean Gaussian-random-field parameters. The correlation kernel is
//   r(x, x') = prod_i exp(-theta * (x_i - x'_i)^2)
// with one theta shared across dimensions; tau2 scales it to a covariance.
// The nugget is a small diagonal addition for numerical stability only.
struct KernelParams {
    double beta = 0.0;
    double tau2 = 1.0;
    double theta = 1.0;
    double nugget = 0.0;
};

struct DesignSet {
    Eigen::MatrixXd X;  // n x d design points, one row per observation
    Eigen::VectorXd Y;  // n responses
};

// Per-dimension affine map applied to every point before the kernel sees it.
// Fitting maps the design's bounding box to [0, 1] so a single theta is
// meaningful across dimensions with different units.
struct Normalization {
    Eigen::VectorXd offset;
    Eigen::VectorXd scale;

    static Normalization identity(Eigen::Index d);
    static Normalization fit(const Eigen::MatrixXd& X);
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    [[nodiscard]] bool is_identity() const;
};

struct Prediction {
    double mean;
    double variance;  // >= 0; round-off dips are clamped (see variance_clamp_count)
};

// Thrown when the correlation matrix is not positive definite; pivot is the
// zero-based index of the failing Cholesky pivot.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(std::string message, Eigen::Index pivot)
        : std::runtime_error(std::move(message)), pivot_(pivot) {}
    [[nodiscard]] Eigen::Index pivot() const { return pivot_; }

private:
    Eigen::Index pivot_;
};

double correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime, double theta);

// Maximum-likelihood mean for the constant trend: the arithmetic mean of Y.
double fit_mean(const Eigen::VectorXd& Y);

// Log likelihood of the design under the GRF with the given parameters,
// computed through the Cholesky factor of R + nugget*I.
double log_likelihood(const KernelParams& params, const DesignSet& design);

struct MleResult {
    KernelParams params;
    bool theta_at_bound = false;
    bool tau2_at_bound = false;
};

// Profile search for (tau2, theta) on a 25x25 log-spaced grid over
// theta in [1e-2, 1e4] and tau2 in [1e-8, 1e4], refined by golden-section
// passes in each coordinate. Deterministic; beta is fixed at fit_mean(Y).
MleResult fit_mle(const DesignSet& design, double nugget);

// Immutable fitted model: cached lower-triangular factor of R + nugget*I and
// the half-solved residual, so predictions are two triangular solves away.
// Safe to share across threads; update() returns an extended copy.
class KrigingModel {
public:
    static KrigingModel build(DesignSet design, KernelParams params);
    static KrigingModel build(DesignSet design, KernelParams params, Normalization norm);

    [[nodiscard]] Prediction predict(const Eigen::VectorXd& x) const;

    // Extends the design by one observation via a rank-1 extension of the
    // factorization; equivalent to rebuilding on the concatenated design.
    [[nodiscard]] KrigingModel update(const Eigen::VectorXd& x_new, double y_new) const;

    [[nodiscard]] const KernelParams& params() const { return params_; }
    [[nodiscard]] const DesignSet& design() const { return design_; }
    [[nodiscard]] const Normalization& normalization() const { return norm_; }
    [[nodiscard]] const Eigen::MatrixXd& factor() const { return chol_; }
    [[nodiscard]] Eigen::Index size() const { return design_.Y.size(); }
    [[nodiscard]] Eigen::Index dim() const { return design_.X.cols(); }
    // True when build() had to raise the nugget to factorize.
    [[nodiscard]] bool nugget_raised() const { return nugget_raised_; }
    // Number of tiny negative predicted variances clamped to zero so far.
    [[nodiscard]] std::uint64_t variance_clamp_count() const { return clamp_count_.load(); }

    KrigingModel(const KrigingModel& other);
    KrigingModel& operator=(const KrigingModel& other);
    KrigingModel(KrigingModel&&) noexcept = default;
    KrigingModel& operator=(KrigingModel&&) noexcept = default;

private:
    KrigingModel() = default;

    KernelParams params_;
    DesignSet design_;
    Normalization norm_;
    Eigen::MatrixXd Xn_;    // normalized design rows
    Eigen::MatrixXd chol_;  // L with L L^T = R + nugget*I
    Eigen::VectorXd half_;  // L^-1 (Y - beta)
    bool nugget_raised_ = false;
    mutable std::atomic<std::uint64_t> clamp_count_{0};
};

struct FittedModel {
    MleResult mle;
    KrigingModel model;
};

// Normalize-then-fit convenience: maps the design box to [0,1]^d, runs
// fit_mle there, and builds the model carrying the normalization.
FittedModel fit_model(const DesignSet& design, double nugget);

}  // namespace accel::kriging
