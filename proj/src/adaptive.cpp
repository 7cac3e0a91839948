#include "accel/adaptive.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "accel/math.hpp"
#include "accel/parallel.hpp"

namespace accel::adaptive {

namespace {

// Predictive variances below this fraction of tau2 are treated as exactly
// deterministic: a new observation there cannot move the estimate.
constexpr double kDegenerateVarianceFraction = 1e-12;

void validate_candidates(const CandidateSet& candidates, Eigen::Index dim) {
    if (candidates.points.rows() < 1) {
        throw std::invalid_argument("selection: candidate set must be nonempty");
    }
    if (candidates.points.cols() != dim) {
        throw std::invalid_argument("selection: candidate dimension mismatch");
    }
    if (!candidates.labels.empty() &&
        static_cast<Eigen::Index>(candidates.labels.size()) != candidates.points.rows()) {
        throw std::invalid_argument("selection: label count must match candidate count");
    }
}

// Ties break to the lowest index.
Eigen::Index argmax(const Eigen::VectorXd& values) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

double pool_probability(const kriging::KrigingModel& model, const Eigen::MatrixXd& pool,
                        est::EventSpec spec, ObjVariant variant) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
        const Eigen::VectorXd x = pool.row(i).transpose();
        if (variant == ObjVariant::obj1) {
            total += (model.predict(x).mean >= spec.gamma) ? 1.0 : 0.0;
        } else {
            total += est::event_prob_pointwise(model, x, spec);
        }
    }
    return total / static_cast<double>(pool.rows());
}

bool duplicates_design_row(const kriging::KrigingModel& model, const Eigen::VectorXd& x) {
    for (Eigen::Index i = 0; i < model.size(); ++i) {
        if (model.design().X.row(i) == x.transpose()) return true;
    }
    return false;
}

}  // namespace

std::string_view criterion_name(Criterion c) {
    switch (c) {
        case Criterion::pnt1: return "pnt1";
        case Criterion::pnt2: return "pnt2";
        case Criterion::obj1: return "obj1";
        case Criterion::obj2: return "obj2";
    }
    return "unknown";
}

Criterion parse_criterion(std::string_view name) {
    if (name == "pnt1") return Criterion::pnt1;
    if (name == "pnt2") return Criterion::pnt2;
    if (name == "obj1") return Criterion::obj1;
    if (name == "obj2") return Criterion::obj2;
    throw std::invalid_argument("unknown selection criterion '" + std::string(name) + "'");
}

// Ambiguity statistic |gamma - mu| / sigma. Both point criteria are strictly
// decreasing functions of it, so ranking candidates by the statistic realizes
// the exact argmax of either criterion even where the probability values
// themselves round to zero; +inf marks deterministic non-boundary points.
double ambiguity_statistic(const kriging::KrigingModel& model, const Eigen::VectorXd& x,
                           est::EventSpec spec) {
    const kriging::Prediction p = model.predict(x);
    const double sigma = std::sqrt(p.variance);
    const double gap = std::abs(spec.gamma - p.mean);
    if (sigma == 0.0) {
        return (gap == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return gap / sigma;
}

// Lowest statistic wins; ties break to the lowest index.
Eigen::Index argmin_statistic(const Eigen::VectorXd& statistics) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < statistics.size(); ++i) {
        if (statistics[i] < statistics[best]) best = i;
    }
    return best;
}

double flip_probability(const kriging::KrigingModel& model, const Eigen::VectorXd& x,
                        est::EventSpec spec) {
    const double t = ambiguity_statistic(model, x, spec);
    return std::isinf(t) ? 0.0 : math::normal_cdf(-t);
}

SelectionResult select_pnt1(const kriging::KrigingModel& model, const CandidateSet& candidates,
                            est::EventSpec spec) {
    validate_candidates(candidates, model.dim());
    SelectionResult result;
    result.criterion = Criterion::pnt1;
    result.criterion_values.resize(candidates.points.rows());
    Eigen::VectorXd statistics(candidates.points.rows());
    for (Eigen::Index i = 0; i < candidates.points.rows(); ++i) {
        statistics[i] = ambiguity_statistic(model, candidates.points.row(i).transpose(), spec);
        result.criterion_values[i] = std::isinf(statistics[i])
                                         ? 0.0
                                         : math::normal_cdf(-statistics[i]);
    }
    result.chosen_index = argmin_statistic(statistics);
    return result;
}

SelectionResult select_pnt2(const kriging::KrigingModel& model, const CandidateSet& candidates,
                            est::EventSpec spec) {
    validate_candidates(candidates, model.dim());
    SelectionResult result;
    result.criterion = Criterion::pnt2;
    result.criterion_values.resize(candidates.points.rows());
    Eigen::VectorXd statistics(candidates.points.rows());
    for (Eigen::Index i = 0; i < candidates.points.rows(); ++i) {
        statistics[i] = ambiguity_statistic(model, candidates.points.row(i).transpose(), spec);
        // Bernoulli variance p(1-p), evaluated as Phi(t)*Phi(-t) so both
        // factors keep full precision in the tails.
        result.criterion_values[i] =
            std::isinf(statistics[i])
                ? 0.0
                : math::normal_cdf(statistics[i]) * math::normal_cdf(-statistics[i]);
    }
    result.chosen_index = argmin_statistic(statistics);
    return result;
}

double expected_objective_change(const kriging::KrigingModel& model,
                                 const Eigen::VectorXd& candidate, est::EventSpec spec,
                                 const Eigen::MatrixXd& F_pool, ObjVariant variant,
                                 int quad_nodes) {
    if (F_pool.rows() < 1) throw std::invalid_argument("expected_objective_change: empty pool");
    if (F_pool.cols() != model.dim()) {
        throw std::invalid_argument("expected_objective_change: pool dimension mismatch");
    }
    if (quad_nodes < 3) {
        throw std::invalid_argument("expected_objective_change: need at least 3 nodes");
    }

    // A candidate the model already interpolates cannot change anything.
    if (model.params().nugget == 0.0 && duplicates_design_row(model, candidate)) return 0.0;
    const kriging::Prediction pred = model.predict(candidate);
    if (pred.variance <= kDegenerateVarianceFraction * model.params().tau2) return 0.0;

    const double p_n = pool_probability(model, F_pool, spec, variant);
    const double sigma = std::sqrt(pred.variance);
    const math::GaussHermite rule = math::gauss_hermite(quad_nodes);
    const double norm = 1.0 / std::sqrt(std::numbers::pi);

    double expectation = 0.0;
    for (int j = 0; j < rule.nodes.size(); ++j) {
        const double y = pred.mean + std::numbers::sqrt2 * sigma * rule.nodes[j];
        const kriging::KrigingModel extended = model.update(candidate, y);
        const double p_next = pool_probability(extended, F_pool, spec, variant);
        const double delta = p_n - p_next;
        expectation += norm * rule.weights[j] * delta * delta;
    }
    return expectation;
}

SelectionResult select_obj(const kriging::KrigingModel& model, const CandidateSet& candidates,
                           est::EventSpec spec, const Eigen::MatrixXd& F_pool, ObjVariant variant,
                           int quad_nodes, int n_threads) {
    validate_candidates(candidates, model.dim());
    SelectionResult result;
    result.criterion = (variant == ObjVariant::obj1) ? Criterion::obj1 : Criterion::obj2;
    result.criterion_values.resize(candidates.points.rows());
    par::parallel_for(candidates.points.rows(), n_threads, [&](std::int64_t i) {
        result.criterion_values[i] = expected_objective_change(
            model, candidates.points.row(i).transpose(), spec, F_pool, variant, quad_nodes);
    });
    result.chosen_index = argmax(result.criterion_values);
    return result;
}

CandidateGenerator grid_candidates(Eigen::VectorXd lo, Eigen::VectorXd hi,
                                   std::vector<int> counts) {
    if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != counts.size()) {
        throw std::invalid_argument("grid_candidates: box/count dimension mismatch");
    }
    Eigen::Index total = 1;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] < 1) throw std::invalid_argument("grid_candidates: counts must be >= 1");
        if (!(hi[k] >= lo[k])) throw std::invalid_argument("grid_candidates: hi must be >= lo");
        total *= counts[k];
    }
    const Eigen::Index d = lo.size();
    Eigen::MatrixXd points(total, d);
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        Eigen::Index rest = idx;
        for (Eigen::Index k = 0; k < d; ++k) {
            const int c = counts[static_cast<std::size_t>(k)];
            const Eigen::Index pos = rest % c;
            rest /= c;
            points(idx, k) =
                (c == 1) ? lo[k] : lo[k] + (hi[k] - lo[k]) * static_cast<double>(pos) / (c - 1);
        }
    }
    CandidateSet fixed{std::move(points), {}};
    return [fixed](int, const rng::RngStream&) { return fixed; };
}

CandidateGenerator draw_candidates(dist::Distribution F, Eigen::Index count) {
    if (count < 1) throw std::invalid_argument("draw_candidates: count must be >= 1");
    return [F = std::move(F), count](int, const rng::RngStream& stream) {
        return CandidateSet{dist::sample(F, stream, count), {}};
    };
}

AdaptiveResult adaptive_loop(kriging::KrigingModel model, const CandidateGenerator& generator,
                             est::EventSpec spec, const dist::Distribution& F,
                             const importance::Indicator& simulator,
                             const AdaptiveOptions& options, const rng::RngStream& stream) {
    if (options.budget < 1) throw std::invalid_argument("adaptive_loop: budget must be >= 1");
    const bool needs_pool =
        options.criterion == Criterion::obj1 || options.criterion == Criterion::obj2;
    if (needs_pool && F.dim() != model.dim()) {
        throw std::invalid_argument("adaptive_loop: F dimension mismatch");
    }

    AdaptiveResult result{std::move(model), {}};
    const rng::RngStream cand_root = stream.split("candidates");
    const rng::RngStream pool_root = stream.split("pool");

    for (int iter = 1; iter <= options.budget; ++iter) {
        const rng::RngStream cand_stream = cand_root.substream(static_cast<std::uint64_t>(iter));
        CandidateSet candidates = generator(iter, cand_stream);
        validate_candidates(candidates, result.model.dim());

        Eigen::MatrixXd pool;
        if (needs_pool) {
            pool = dist::sample(F, pool_root.substream(static_cast<std::uint64_t>(iter)),
                                options.pool_size);
        }

        SelectionResult selection;
        switch (options.criterion) {
            case Criterion::pnt1:
                selection = select_pnt1(result.model, candidates, spec);
                break;
            case Criterion::pnt2:
                selection = select_pnt2(result.model, candidates, spec);
                break;
            case Criterion::obj1:
                selection = select_obj(result.model, candidates, spec, pool, ObjVariant::obj1,
                                       options.quad_nodes, options.n_threads);
                break;
            case Criterion::obj2:
                selection = select_obj(result.model, candidates, spec, pool, ObjVariant::obj2,
                                       options.quad_nodes, options.n_threads);
                break;
        }

        std::set<Eigen::Index> excluded;
        // Candidates already in the design cannot be re-sampled with nugget 0.
        if (result.model.params().nugget == 0.0) {
            for (Eigen::Index i = 0; i < candidates.points.rows(); ++i) {
                if (duplicates_design_row(result.model, candidates.points.row(i).transpose())) {
                    excluded.insert(i);
                }
            }
        }

        bool accepted = false;
        while (!accepted) {
            Eigen::Index chosen = -1;
            for (Eigen::Index i = 0; i < candidates.points.rows(); ++i) {
                if (excluded.count(i)) continue;
                if (chosen < 0 || selection.criterion_values[i] > selection.criterion_values[chosen]) {
                    chosen = i;
                }
            }
            if (chosen < 0) {
                std::ostringstream os;
                os << "adaptive_loop: iteration " << iter << " has no admissible candidate left";
                throw std::runtime_error(os.str());
            }

            const Eigen::VectorXd x = candidates.points.row(chosen).transpose();
            // The extension pivot is variance/tau2 + nugget; a candidate the
            // model already pins down cannot be added (and a sample there
            // could not change anything).
            if (result.model.predict(x).variance <=
                kDegenerateVarianceFraction * result.model.params().tau2) {
                excluded.insert(chosen);
                continue;
            }
            AuditEntry entry;
            entry.iteration = iter;
            entry.criterion = options.criterion;
            entry.candidates = candidates.points;
            entry.criterion_values = selection.criterion_values;
            entry.chosen_index = chosen;
            try {
                entry.response = simulator(x);
            } catch (const std::exception&) {
                entry.simulator_failed = true;
                entry.response = std::numeric_limits<double>::quiet_NaN();
                entry.design_size_after = result.model.size();
                result.log.push_back(std::move(entry));
                excluded.insert(chosen);
                continue;
            }
            result.model = result.model.update(x, entry.response);
            entry.design_size_after = result.model.size();
            result.log.push_back(std::move(entry));
            accepted = true;
        }
    }
    return result;
}

}  // namespace accel::adaptive
