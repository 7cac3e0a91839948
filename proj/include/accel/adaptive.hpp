#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "accel/distributions.hpp"
#include "accel/estimation.hpp"
#include "accel/importance.hpp"
#include "accel/kriging.hpp"
#include "accel/rng.hpp"

namespace accel::adaptive {

enum class Criterion { pnt1, pnt2, obj1, obj2 };
std::string_view criterion_name(Criterion c);
Criterion parse_criterion(std::string_view name);

struct CandidateSet {
    Eigen::MatrixXd points;           // one candidate per row
    std::vector<std::string> labels;  // optional, empty or one per row
};

struct SelectionResult {
    Eigen::Index chosen_index = 0;
    Eigen::VectorXd criterion_values;  // aligned with the candidates
    Criterion criterion = Criterion::pnt1;
};

// Probability that a fresh observation at x lands on the other side of gamma
// from the current predictive mean: Phi(-|gamma - mu|/sigma), in [0, 0.5].
double flip_probability(const kriging::KrigingModel& model, const Eigen::VectorXd& x,
                        est::EventSpec spec);

// Most-ambiguous-point selection: argmax of the flip probability.
SelectionResult select_pnt1(const kriging::KrigingModel& model, const CandidateSet& candidates,
                            est::EventSpec spec);

// Largest Bernoulli variance p(1-p) of the expected indicator.
SelectionResult select_pnt2(const kriging::KrigingModel& model, const CandidateSet& candidates,
                            est::EventSpec spec);

enum class ObjVariant { obj1, obj2 };

// Expected squared change of the probability estimate if the candidate were
// sampled: E[(P_n - P_{n+1})^2] with the outer expectation over the predictive
// distribution of y(candidate), evaluated by Gauss-Hermite quadrature. P_n and
// every P_{n+1} share the same fixed pool of F-draws (common random numbers).
double expected_objective_change(const kriging::KrigingModel& model,
                                 const Eigen::VectorXd& candidate, est::EventSpec spec,
                                 const Eigen::MatrixXd& F_pool, ObjVariant variant,
                                 int quad_nodes);

SelectionResult select_obj(const kriging::KrigingModel& model, const CandidateSet& candidates,
                           est::EventSpec spec, const Eigen::MatrixXd& F_pool, ObjVariant variant,
                           int quad_nodes, int n_threads = 1);

// Produces the selection set for one loop iteration (1-based). The stream is
// that iteration's private candidate stream; grid generators ignore it.
using CandidateGenerator = std::function<CandidateSet(int iteration, const rng::RngStream&)>;

CandidateGenerator grid_candidates(Eigen::VectorXd lo, Eigen::VectorXd hi,
                                   std::vector<int> counts);
CandidateGenerator draw_candidates(dist::Distribution F, Eigen::Index count);

struct AdaptiveOptions {
    Criterion criterion = Criterion::pnt1;
    int budget = 10;                // design points to add
    Eigen::Index pool_size = 1000;  // F-draws per objective-criterion evaluation
    int quad_nodes = 15;
    int n_threads = 1;
};

struct AuditEntry {
    int iteration = 0;
    Criterion criterion = Criterion::pnt1;
    Eigen::MatrixXd candidates;
    Eigen::VectorXd criterion_values;
    Eigen::Index chosen_index = 0;
    double response = 0.0;
    bool simulator_failed = false;
    Eigen::Index design_size_after = 0;
};

struct AdaptiveResult {
    kriging::KrigingModel model;
    std::vector<AuditEntry> log;
};

// Sequential design loop: regenerate candidates, score, select, run the
// simulator at the winner, extend the model. A simulator failure is logged,
// the candidate is excluded for that iteration's retry, and the budget is not
// consumed.
AdaptiveResult adaptive_loop(kriging::KrigingModel model, const CandidateGenerator& generator,
                             est::EventSpec spec, const dist::Distribution& F,
                             const importance::Indicator& simulator,
                             const AdaptiveOptions& options, const rng::RngStream& stream);

}  // namespace accel::adaptive
