#include "accel/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "accel/math.hpp"

namespace accel::kriging {

namespace {

constexpr double kThetaLo = 1e-2;
constexpr double kThetaHi = 1e4;
constexpr double kTau2Lo = 1e-8;
constexpr double kTau2Hi = 1e4;
constexpr int kGridSize = 25;
constexpr double kAutoNugget = 1e-8;  // times the unit diagonal of R
constexpr double kVarianceClampFloor = -1e-10;

void validate_params(const KernelParams& p) {
    if (!(p.tau2 > 0.0)) throw std::invalid_argument("kriging: tau2 must be > 0");
    if (!(p.theta > 0.0)) throw std::invalid_argument("kriging: theta must be > 0");
    if (!(p.nugget >= 0.0)) throw std::invalid_argument("kriging: nugget must be >= 0");
}

void validate_design(const DesignSet& d) {
    if (d.Y.size() < 1) throw std::invalid_argument("kriging: design needs at least one row");
    if (d.X.rows() != d.Y.size()) {
        throw std::invalid_argument("kriging: row count of X must equal length of Y");
    }
    if (d.X.cols() < 1) throw std::invalid_argument("kriging: design needs at least one column");
}

// Gaussian correlation matrix of the (already normalized) rows, unit diagonal.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& Xn, double theta) {
    const Eigen::Index n = Xn.rows();
    Eigen::MatrixXd R(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        R(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double sq = (Xn.row(i) - Xn.row(j)).squaredNorm();
            const double r = std::exp(-theta * sq);
            R(i, j) = r;
            R(j, i) = r;
        }
    }
    return R;
}

// In-place lower Cholesky of A + nugget*I. Returns the failing pivot index,
// or -1 on success.
Eigen::Index cholesky(Eigen::MatrixXd A, double nugget, Eigen::MatrixXd& L_out) {
    const Eigen::Index n = A.rows();
    A.diagonal().array() += nugget;
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = A(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
        if (!(d > 0.0)) return j;
        const double ljj = std::sqrt(d);
        A(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= A(i, k) * A(j, k);
            A(i, j) = s / ljj;
        }
    }
    L_out = A.triangularView<Eigen::Lower>();
    return -1;
}

Eigen::VectorXd forward_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b) {
    return L.triangularView<Eigen::Lower>().solve(b);
}

bool has_duplicate_rows(const Eigen::MatrixXd& X, Eigen::Index* i_out, Eigen::Index* j_out) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
            if (X.row(i) == X.row(j)) {
                *i_out = i;
                *j_out = j;
                return true;
            }
        }
    }
    return false;
}

// Log likelihood given a factor of R + nugget*I; tau2 enters in closed form.
double log_likelihood_from_factor(const Eigen::MatrixXd& L, const Eigen::VectorXd& residual,
                                  double tau2) {
    const Eigen::Index n = L.rows();
    const double log_det_r = 2.0 * L.diagonal().array().log().sum();
    const double quad = forward_solve(L, residual).squaredNorm();
    return -0.5 * (n * std::log(2.0 * std::numbers::pi) + n * std::log(tau2) + log_det_r +
                   quad / tau2);
}

}  // namespace

Normalization Normalization::identity(Eigen::Index d) {
    Normalization norm;
    norm.offset = Eigen::VectorXd::Zero(d);
    norm.scale = Eigen::VectorXd::Ones(d);
    return norm;
}

Normalization Normalization::fit(const Eigen::MatrixXd& X) {
    Normalization norm;
    norm.offset = X.colwise().minCoeff().transpose();
    norm.scale = (X.colwise().maxCoeff() - X.colwise().minCoeff()).transpose();
    for (Eigen::Index k = 0; k < norm.scale.size(); ++k) {
        if (!(norm.scale[k] > 0.0)) norm.scale[k] = 1.0;  // degenerate column
    }
    return norm;
}

Eigen::VectorXd Normalization::apply(const Eigen::VectorXd& x) const {
    if (x.size() != offset.size()) {
        throw std::invalid_argument("normalization: dimension mismatch");
    }
    return (x - offset).cwiseQuotient(scale);
}

bool Normalization::is_identity() const {
    return offset.isZero(0.0) && scale.isOnes(0.0);
}

double correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("correlation: theta must be > 0");
    if (x.size() != x_prime.size()) {
        throw std::invalid_argument("correlation: points must share a dimension");
    }
    return std::exp(-theta * (x - x_prime).squaredNorm());
}

double fit_mean(const Eigen::VectorXd& Y) {
    if (Y.size() < 1) throw std::invalid_argument("fit_mean: empty response vector");
    return Y.mean();
}

double log_likelihood(const KernelParams& params, const DesignSet& design) {
    validate_params(params);
    validate_design(design);
    const Eigen::MatrixXd R = correlation_matrix(design.X, params.theta);
    Eigen::MatrixXd L;
    const Eigen::Index pivot = cholesky(R, params.nugget, L);
    if (pivot >= 0) {
        std::ostringstream os;
        os << "log_likelihood: correlation matrix not positive definite (pivot " << pivot << ")";
        throw FactorizationError(os.str(), pivot);
    }
    return log_likelihood_from_factor(L, design.Y.array() - params.beta, params.tau2);
}

MleResult fit_mle(const DesignSet& design, double nugget) {
    validate_design(design);
    if (design.Y.size() < 2) throw std::invalid_argument("fit_mle: need at least two rows");
    if (!(nugget >= 0.0)) throw std::invalid_argument("fit_mle: nugget must be >= 0");

    const double beta = fit_mean(design.Y);
    const Eigen::VectorXd residual = design.Y.array() - beta;

    const double log_theta_lo = std::log(kThetaLo), log_theta_hi = std::log(kThetaHi);
    const double log_tau2_lo = std::log(kTau2Lo), log_tau2_hi = std::log(kTau2Hi);

    // Likelihood in log-parameter space; -inf where the factorization fails.
    Eigen::MatrixXd L;
    const auto eval = [&](double log_theta, double log_tau2) -> double {
        const Eigen::MatrixXd R = correlation_matrix(design.X, std::exp(log_theta));
        if (cholesky(R, nugget, L) >= 0) return -std::numeric_limits<double>::infinity();
        return log_likelihood_from_factor(L, residual, std::exp(log_tau2));
    };

    double best_lt = 0.0, best_lv = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGridSize; ++i) {
        const double lt = log_theta_lo + (log_theta_hi - log_theta_lo) * i / (kGridSize - 1);
        const Eigen::MatrixXd R = correlation_matrix(design.X, std::exp(lt));
        if (cholesky(R, nugget, L) >= 0) continue;
        for (int j = 0; j < kGridSize; ++j) {
            const double lv = log_tau2_lo + (log_tau2_hi - log_tau2_lo) * j / (kGridSize - 1);
            const double ll = log_likelihood_from_factor(L, residual, std::exp(lv));
            if (ll > best) {
                best = ll;
                best_lt = lt;
                best_lv = lv;
            }
        }
    }
    if (!std::isfinite(best)) {
        throw FactorizationError("fit_mle: no grid point admits a positive definite kernel", 0);
    }

    // Coordinate-wise golden-section refinement around the best grid cell.
    const double theta_step = (log_theta_hi - log_theta_lo) / (kGridSize - 1);
    const double tau2_step = (log_tau2_hi - log_tau2_lo) / (kGridSize - 1);
    for (int pass = 0; pass < 2; ++pass) {
        const double t_lo = std::max(log_theta_lo, best_lt - theta_step);
        const double t_hi = std::min(log_theta_hi, best_lt + theta_step);
        const double lt = math::golden_section_max(
            [&](double v) { return eval(v, best_lv); }, t_lo, t_hi);
        if (eval(lt, best_lv) > best) {
            best = eval(lt, best_lv);
            best_lt = lt;
        }
        const double v_lo = std::max(log_tau2_lo, best_lv - tau2_step);
        const double v_hi = std::min(log_tau2_hi, best_lv + tau2_step);
        const double lv = math::golden_section_max(
            [&](double v) { return eval(best_lt, v); }, v_lo, v_hi);
        if (eval(best_lt, lv) > best) {
            best = eval(best_lt, lv);
            best_lv = lv;
        }
    }

    MleResult result;
    result.params.beta = beta;
    result.params.theta = std::exp(best_lt);
    result.params.tau2 = std::exp(best_lv);
    result.params.nugget = nugget;
    const double edge = 1.02;
    result.theta_at_bound =
        result.params.theta <= kThetaLo * edge || result.params.theta >= kThetaHi / edge;
    result.tau2_at_bound =
        result.params.tau2 <= kTau2Lo * edge || result.params.tau2 >= kTau2Hi / edge;
    return result;
}

KrigingModel::KrigingModel(const KrigingModel& other)
    : params_(other.params_),
      design_(other.design_),
      norm_(other.norm_),
      Xn_(other.Xn_),
      chol_(other.chol_),
      half_(other.half_),
      nugget_raised_(other.nugget_raised_),
      clamp_count_(other.clamp_count_.load()) {}

KrigingModel& KrigingModel::operator=(const KrigingModel& other) {
    if (this != &other) {
        params_ = other.params_;
        design_ = other.design_;
        norm_ = other.norm_;
        Xn_ = other.Xn_;
        chol_ = other.chol_;
        half_ = other.half_;
        nugget_raised_ = other.nugget_raised_;
        clamp_count_.store(other.clamp_count_.load());
    }
    return *this;
}

KrigingModel KrigingModel::build(DesignSet design, KernelParams params) {
    const Eigen::Index d = design.X.cols();
    return build(std::move(design), params, Normalization::identity(d));
}

KrigingModel KrigingModel::build(DesignSet design, KernelParams params, Normalization norm) {
    validate_params(params);
    validate_design(design);
    if (norm.offset.size() != design.X.cols()) {
        throw std::invalid_argument("build: normalization dimension mismatch");
    }

    if (params.nugget == 0.0) {
        Eigen::Index i, j;
        if (has_duplicate_rows(design.X, &i, &j)) {
            std::ostringstream os;
            os << "build: design rows " << i << " and " << j
               << " are identical; the correlation matrix is singular with nugget 0";
            throw std::invalid_argument(os.str());
        }
    }

    KrigingModel model;
    model.params_ = params;
    model.design_ = std::move(design);
    model.norm_ = std::move(norm);

    const Eigen::Index n = model.design_.X.rows();
    model.Xn_.resize(n, model.design_.X.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        model.Xn_.row(i) = model.norm_.apply(model.design_.X.row(i).transpose()).transpose();
    }

    const Eigen::MatrixXd R = correlation_matrix(model.Xn_, params.theta);
    double nugget = params.nugget;
    Eigen::Index pivot = cholesky(R, nugget, model.chol_);
    if (pivot >= 0 && params.nugget == 0.0) {
        // Stability fallback: raise from zero in decades, three attempts.
        for (int attempt = 0; attempt < 3 && pivot >= 0; ++attempt) {
            nugget = kAutoNugget * std::pow(10.0, attempt);
            pivot = cholesky(R, nugget, model.chol_);
        }
        model.nugget_raised_ = pivot < 0;
    }
    if (pivot >= 0) {
        std::ostringstream os;
        os << "build: factorization of R + nugget*I failed at pivot " << pivot
           << "; increase the nugget or separate near-duplicate design points";
        throw FactorizationError(os.str(), pivot);
    }
    model.params_.nugget = nugget;
    model.half_ = forward_solve(model.chol_, model.design_.Y.array() - params.beta);
    return model;
}

Prediction KrigingModel::predict(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw std::invalid_argument("predict: dimension mismatch");
    const Eigen::VectorXd xn = norm_.apply(x);

    const Eigen::Index n = size();
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r[i] = std::exp(-params_.theta * (xn.transpose() - Xn_.row(i)).squaredNorm());
    }
    const Eigen::VectorXd v = forward_solve(chol_, r);

    Prediction out;
    out.mean = params_.beta + v.dot(half_);
    double variance = params_.tau2 * (1.0 - v.squaredNorm());
    if (variance < 0.0) {
        if (variance < kVarianceClampFloor) {
            std::ostringstream os;
            os << "predict: variance " << variance
               << " is below the clamp floor; the factorization is no longer trustworthy";
            throw std::runtime_error(os.str());
        }
        variance = 0.0;
        clamp_count_.fetch_add(1, std::memory_order_relaxed);
    }
    out.variance = variance;
    return out;
}

KrigingModel KrigingModel::update(const Eigen::VectorXd& x_new, double y_new) const {
    if (x_new.size() != dim()) throw std::invalid_argument("update: dimension mismatch");
    const Eigen::Index n = size();
    if (params_.nugget == 0.0) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (design_.X.row(i) == x_new.transpose()) {
                std::ostringstream os;
                os << "update: point duplicates design row " << i << " and nugget is 0";
                throw std::invalid_argument(os.str());
            }
        }
    }

    const Eigen::VectorXd xn = norm_.apply(x_new);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r[i] = std::exp(-params_.theta * (xn.transpose() - Xn_.row(i)).squaredNorm());
    }
    const Eigen::VectorXd w = forward_solve(chol_, r);
    const double s_sq = 1.0 + params_.nugget - w.squaredNorm();
    if (!(s_sq > 0.0)) {
        throw FactorizationError(
            "update: extension pivot is not positive; the new point is numerically "
            "indistinguishable from the existing design (raise the nugget)",
            n);
    }
    const double s = std::sqrt(s_sq);

    KrigingModel out;
    out.params_ = params_;
    out.norm_ = norm_;
    out.nugget_raised_ = nugget_raised_;

    out.design_.X.resize(n + 1, dim());
    out.design_.X.topRows(n) = design_.X;
    out.design_.X.row(n) = x_new.transpose();
    out.design_.Y.resize(n + 1);
    out.design_.Y.head(n) = design_.Y;
    out.design_.Y[n] = y_new;

    out.Xn_.resize(n + 1, dim());
    out.Xn_.topRows(n) = Xn_;
    out.Xn_.row(n) = xn.transpose();

    out.chol_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    out.chol_.topLeftCorner(n, n) = chol_;
    out.chol_.row(n).head(n) = w.transpose();
    out.chol_(n, n) = s;

    out.half_.resize(n + 1);
    out.half_.head(n) = half_;
    out.half_[n] = (y_new - params_.beta - w.dot(half_)) / s;
    return out;
}

FittedModel fit_model(const DesignSet& design, double nugget) {
    validate_design(design);
    const Normalization norm = Normalization::fit(design.X);

    DesignSet normalized;
    normalized.X.resize(design.X.rows(), design.X.cols());
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        normalized.X.row(i) = norm.apply(design.X.row(i).transpose()).transpose();
    }
    normalized.Y = design.Y;

    MleResult mle = fit_mle(normalized, nugget);
    KrigingModel model = KrigingModel::build(design, mle.params, norm);
    return FittedModel{std::move(mle), std::move(model)};
}

}  // namespace accel::kriging
