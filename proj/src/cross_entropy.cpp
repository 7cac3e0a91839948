#include "accel/cross_entropy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "accel/parallel.hpp"

namespace accel::ce {

namespace {

// Scalar marginals in coordinate order; nested products are flattened.
void flatten(const dist::Distribution& d, std::vector<dist::Distribution>& out) {
    if (const auto* prod = std::get_if<dist::Product>(&d.value())) {
        for (const auto& c : prod->components) flatten(c, out);
    } else {
        out.push_back(d);
    }
}

dist::Distribution assemble(std::vector<dist::Distribution> marginals) {
    if (marginals.size() == 1) return marginals.front();
    return dist::Distribution(dist::Product{std::move(marginals)});
}

dist::Distribution update_marginal(const dist::Distribution& current,
                                   const Eigen::VectorXd& column,
                                   const Eigen::VectorXd& weights, double smoothing) {
    return std::visit(
        [&](const auto& fam) -> dist::Distribution {
            using T = std::decay_t<decltype(fam)>;
            const double keep = 1.0 - smoothing;
            if constexpr (std::is_same_v<T, dist::Exponential>) {
                const double rate = ce_update_exponential(column, weights);
                return dist::Exponential{smoothing * rate + keep * fam.rate};
            } else if constexpr (std::is_same_v<T, dist::Pareto>) {
                // The support boundary stays fixed; only the shape is tilted.
                const double shape = ce_update_pareto(column, weights, fam.scale);
                return dist::Pareto{fam.scale, smoothing * shape + keep * fam.shape};
            } else if constexpr (std::is_same_v<T, dist::GaussianUV>) {
                const dist::GaussianUV g = ce_update_gaussian(column, weights);
                return dist::GaussianUV{smoothing * g.mean + keep * fam.mean,
                                        smoothing * g.sd + keep * fam.sd};
            } else {
                throw std::invalid_argument("ce_iterate: nested product after flattening");
            }
        },
        current.value());
}

std::vector<double> free_parameters(const std::vector<dist::Distribution>& marginals) {
    std::vector<double> out;
    for (const auto& m : marginals) {
        std::visit(
            [&](const auto& fam) {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, dist::Exponential>) {
                    out.push_back(fam.rate);
                } else if constexpr (std::is_same_v<T, dist::Pareto>) {
                    out.push_back(fam.shape);
                } else if constexpr (std::is_same_v<T, dist::GaussianUV>) {
                    out.push_back(fam.mean);
                    out.push_back(fam.sd);
                }
            },
            m.value());
    }
    return out;
}

double max_relative_change(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace

Eigen::VectorXd ce_weights(const Eigen::VectorXd& indicator_values, const dist::Distribution& f,
                           const dist::Distribution& f_theta_s, const Eigen::MatrixXd& samples) {
    if (indicator_values.size() != samples.rows()) {
        throw std::invalid_argument("ce_weights: indicator/sample length mismatch");
    }
    Eigen::VectorXd weights(samples.rows());
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        const double ind = indicator_values[i];
        if (ind < 0.0) throw std::invalid_argument("ce_weights: negative indicator value");
        weights[i] =
            (ind == 0.0)
                ? 0.0
                : ind * dist::likelihood_ratio(f, f_theta_s, samples.row(i).transpose());
    }
    return weights;
}

double ce_update_exponential(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights) {
    if (samples.size() != weights.size()) {
        throw std::invalid_argument("ce_update_exponential: length mismatch");
    }
    const double wsum = weights.sum();
    if (wsum <= 0.0) {
        throw std::runtime_error(
            "ce_update_exponential: no elite samples; increase n or start closer");
    }
    const double wx = weights.dot(samples);
    if (!(wx > 0.0)) {
        throw std::runtime_error("ce_update_exponential: weighted sample sum must be positive");
    }
    return wsum / wx;
}

double ce_update_pareto(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights,
                        double scale) {
    if (samples.size() != weights.size()) {
        throw std::invalid_argument("ce_update_pareto: length mismatch");
    }
    if (!(scale > 0.0)) throw std::invalid_argument("ce_update_pareto: scale must be > 0");
    const double wsum = weights.sum();
    if (wsum <= 0.0) {
        throw std::runtime_error("ce_update_pareto: no elite samples; increase n or start closer");
    }
    double wlog = 0.0;
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        if (weights[i] == 0.0) continue;
        if (samples[i] < scale) {
            throw std::invalid_argument("ce_update_pareto: sample below the scale boundary");
        }
        wlog += weights[i] * std::log(samples[i] / scale);
    }
    if (!(wlog > 0.0)) {
        throw std::runtime_error(
            "ce_update_pareto: weighted log-spacing vanishes; all mass sits on the boundary");
    }
    return wsum / wlog;
}

dist::GaussianUV ce_update_gaussian(const Eigen::VectorXd& samples,
                                    const Eigen::VectorXd& weights) {
    if (samples.size() != weights.size()) {
        throw std::invalid_argument("ce_update_gaussian: length mismatch");
    }
    const double wsum = weights.sum();
    if (wsum <= 0.0) {
        throw std::runtime_error(
            "ce_update_gaussian: no elite samples; increase n or start closer");
    }
    const double mean = weights.dot(samples) / wsum;
    double var = 0.0;
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - mean;
        var += weights[i] * d * d;
    }
    var /= wsum;
    return dist::GaussianUV{mean, std::max(std::sqrt(var), 1e-12)};
}

double ce_objective(const dist::Distribution& f_theta, const Eigen::MatrixXd& samples,
                    const Eigen::VectorXd& weights) {
    if (samples.rows() != weights.size()) {
        throw std::invalid_argument("ce_objective: length mismatch");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        if (weights[i] == 0.0) continue;
        total += weights[i] * dist::log_density(f_theta, samples.row(i).transpose());
    }
    return total / static_cast<double>(samples.rows());
}

CEState ce_iterate(const importance::Indicator& indicator, const dist::Distribution& f,
                   const dist::Distribution& theta0, const CEOptions& options,
                   const rng::RngStream& stream) {
    if (options.n_per_iter < 1) throw std::invalid_argument("ce_iterate: n_per_iter must be >= 1");
    if (options.max_iter < 1) throw std::invalid_argument("ce_iterate: max_iter must be >= 1");
    if (!(options.smoothing > 0.0 && options.smoothing <= 1.0)) {
        throw std::invalid_argument("ce_iterate: smoothing must lie in (0, 1]");
    }
    if (theta0.dim() != f.dim()) {
        throw std::invalid_argument("ce_iterate: family dimension must match f");
    }

    CEState state{theta0, 0, options.n_per_iter, {}, false};

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        const rng::RngStream iter_stream = stream.substream(static_cast<std::uint64_t>(iter));

        Eigen::MatrixXd samples;
        Eigen::VectorXd ind_values;
        Eigen::VectorXd weights;
        Eigen::Index n_used = 0;
        bool have_hits = false;
        for (int attempt = 0; attempt < 2 && !have_hits; ++attempt) {
            n_used = options.n_per_iter * (attempt == 0 ? 1 : 4);
            const rng::RngStream draw =
                (attempt == 0) ? iter_stream.split("draw") : iter_stream.split("retry");
            samples = dist::sample(state.theta_s, draw, n_used);
            ind_values.resize(n_used);
            par::parallel_for(n_used, options.n_threads, [&](std::int64_t i) {
                ind_values[i] = indicator(samples.row(i).transpose());
            });
            weights = ce_weights(ind_values, f, state.theta_s, samples);
            have_hits = (weights.array() != 0.0).any();
        }
        if (!have_hits) {
            std::ostringstream os;
            os << "ce_iterate: no elite samples in iteration " << iter << " even after a 4x retry;"
               << " increase n_per_iter or start theta closer to the event region";
            throw std::runtime_error(os.str());
        }

        std::vector<dist::Distribution> marginals;
        flatten(state.theta_s, marginals);
        std::vector<dist::Distribution> updated;
        updated.reserve(marginals.size());
        for (std::size_t j = 0; j < marginals.size(); ++j) {
            updated.push_back(update_marginal(marginals[j], samples.col(static_cast<Eigen::Index>(j)),
                                              weights, options.smoothing));
        }

        const std::vector<double> before = free_parameters(marginals);
        const std::vector<double> after = free_parameters(updated);
        const double change = max_relative_change(before, after);

        dist::Distribution theta_new = assemble(std::move(updated));
        const double objective = ce_objective(theta_new, samples, weights);
        const Eigen::Index hits = (ind_values.array() > 0.0).count();
        state.history.push_back(CEIteration{theta_new, objective, hits, n_used});
        state.theta_s = std::move(theta_new);
        state.iteration = iter;

        if (change < options.tol) {
            state.converged = true;
            break;
        }
    }
    return state;
}

}  // namespace accel::ce
