#include "accel/app.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "accel/adaptive.hpp"
#include "accel/config.hpp"
#include "accel/cross_entropy.hpp"
#include "accel/csv.hpp"
#include "accel/distributions.hpp"
#include "accel/estimation.hpp"
#include "accel/importance.hpp"
#include "accel/kriging.hpp"
#include "accel/model_io.hpp"
#include "accel/parallel.hpp"
#include "accel/scenario.hpp"

namespace accel::app {

namespace {

namespace fs = std::filesystem;
using cfg::Config;
using cfg::ConfigError;

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::int64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::optional<std::string> indicator;
};

struct RunContext {
    Config config;
    fs::path out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    std::shared_ptr<std::atomic<std::uint64_t>> sim_calls =
        std::make_shared<std::atomic<std::uint64_t>>(0);
    std::vector<std::pair<std::string, double>> timings;
    std::vector<std::string> artifacts;

    rng::RngStream master() const { return rng::RngStream(seed); }

    void note_artifact(const std::string& name) { artifacts.push_back(name); }
};

class Stopwatch {
public:
    explicit Stopwatch(RunContext& ctx, std::string label)
        : ctx_(ctx), label_(std::move(label)), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        ctx_.timings.emplace_back(
            label_, std::chrono::duration<double, std::milli>(elapsed).count());
    }

private:
    RunContext& ctx_;
    std::string label_;
    std::chrono::steady_clock::time_point start_;
};

std::string hex64(std::uint64_t value) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << value;
    return os.str();
}

RunContext make_context(const CommonArgs& args, const std::string& subcommand) {
    Config config = Config::parse_file(args.config_path);
    for (const auto& assignment : args.overrides) config.apply_override(assignment);
    if (args.seed) config.set("run", "seed", std::to_string(*args.seed));
    if (args.threads) config.set("run", "threads", std::to_string(*args.threads));
    if (args.out) config.set("run", "out", *args.out);
    if (args.indicator) {
        const std::string section = (subcommand == "pipeline") ? "pipeline"
                                    : (subcommand == "ce")     ? "ce"
                                                               : "is";
        config.set(section, "indicator", *args.indicator);
    }

    RunContext ctx;
    ctx.seed = static_cast<std::uint64_t>(config.get_int("run", "seed", 12345));
    ctx.threads = static_cast<int>(config.get_int("run", "threads", 1));
    if (ctx.threads < 1) throw ConfigError("run.threads must be >= 1", "run.threads");

    if (const auto out = config.get("run", "out")) {
        ctx.out_dir = *out;
    } else {
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(now).count();
        ctx.out_dir = fs::path("runs") / (std::to_string(seconds) + "-" +
                                          hex64(config.hash()).substr(0, 8) + "-" + subcommand);
    }
    fs::create_directories(ctx.out_dir);
    ctx.config = std::move(config);
    return ctx;
}

void write_manifest(RunContext& ctx, const std::string& subcommand) {
    {
        io::CsvWriter timing(ctx.out_dir / "timing.csv", {"label", "wall_ms"});
        for (const auto& [label, ms] : ctx.timings) timing.row({label, io::format_double(ms)});
    }
    nlohmann::ordered_json manifest;
    manifest["subcommand"] = subcommand;
    manifest["version"] = kVersion;
    manifest["config_hash"] = hex64(ctx.config.hash());
    manifest["master_seed"] = ctx.seed;
    manifest["threads"] = ctx.threads;
    manifest["simulator_calls"] = ctx.sim_calls->load();
    ctx.note_artifact("timing.csv");
    ctx.note_artifact("manifest.json");
    std::sort(ctx.artifacts.begin(), ctx.artifacts.end());
    manifest["artifacts"] = ctx.artifacts;
    manifest["config"] = ctx.config.canonical();
    std::ofstream out(ctx.out_dir / "manifest.json");
    out << manifest.dump(2) << "\n";
}

scenario::SimConfig sim_config(const Config& config) {
    scenario::SimConfig cfg;
    cfg.dt = config.get_double("scenario", "dt", cfg.dt);
    cfg.horizon = config.get_double("scenario", "horizon", cfg.horizon);
    cfg.acc_time_headway = config.get_double("scenario", "time_headway", cfg.acc_time_headway);
    cfg.acc_gain_spacing = config.get_double("scenario", "gain_spacing", cfg.acc_gain_spacing);
    cfg.acc_gain_speed = config.get_double("scenario", "gain_speed", cfg.acc_gain_speed);
    cfg.aeb_ttc_trigger = config.get_double("scenario", "aeb_trigger", cfg.aeb_ttc_trigger);
    cfg.aeb_decel = config.get_double("scenario", "aeb_decel", cfg.aeb_decel);
    cfg.accel_min = config.get_double("scenario", "accel_min", cfg.accel_min);
    cfg.accel_max = config.get_double("scenario", "accel_max", cfg.accel_max);
    cfg.range_event_threshold = config.get_double("scenario", "threshold", cfg.range_event_threshold);
    scenario::validate(cfg);
    return cfg;
}

// The black-box simulator named by [scenario]; every invocation is counted,
// and an optional config flag serializes calls for non-reentrant stand-ins.
importance::Indicator make_simulator(const RunContext& ctx) {
    const Config& config = ctx.config;
    const std::string type = config.get_string("scenario", "type", "lane_change");
    importance::Indicator core;
    if (type == "lane_change") {
        const scenario::SimConfig cfg = sim_config(config);
        const double v = config.get_double("scenario", "v", 10.0);
        core = [cfg, v](const Eigen::VectorXd& x) { return scenario::indicator(x, v, cfg); };
    } else if (type == "threshold") {
        const double cut = config.require_double("scenario", "cut");
        const auto coord = static_cast<Eigen::Index>(config.get_int("scenario", "coordinate", 0));
        core = [cut, coord](const Eigen::VectorXd& x) {
            if (coord < 0 || coord >= x.size()) {
                throw std::invalid_argument("threshold scenario: coordinate out of range");
            }
            return (x[coord] >= cut) ? 1.0 : 0.0;
        };
    } else {
        throw ConfigError("unknown scenario.type '" + type + "'", "scenario.type");
    }

    auto calls = ctx.sim_calls;
    if (ctx.config.get_bool("run", "serialize_indicator", false)) {
        auto mutex = std::make_shared<std::mutex>();
        return [core, calls, mutex](const Eigen::VectorXd& x) {
            std::lock_guard<std::mutex> lock(*mutex);
            calls->fetch_add(1, std::memory_order_relaxed);
            return core(x);
        };
    }
    return [core, calls](const Eigen::VectorXd& x) {
        calls->fetch_add(1, std::memory_order_relaxed);
        return core(x);
    };
}

dist::Distribution distribution_from(const Config& config, const std::string& key) {
    const std::string spec = config.require_string("distribution", key);
    try {
        return dist::parse(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("distribution." + key + ": " + e.what(), "distribution." + key);
    }
}

dist::Distribution natural_distribution(const Config& config) {
    if (config.has("distribution", "f")) return distribution_from(config, "f");
    if (config.get_string("scenario", "type", "lane_change") == "lane_change") {
        return scenario::natural_distribution();
    }
    throw ConfigError("distribution.f is required for this scenario", "distribution.f");
}

est::EventSpec event_spec(const Config& config) {
    return est::EventSpec{config.get_double("event", "gamma", 0.5)};
}

// Surrogate per [kriging]: an existing model file, or a design CSV built with
// explicit parameters (tau2 and theta both set) or fitted by MLE.
kriging::KrigingModel surrogate_model(const Config& config) {
    if (const auto model_path = config.get("kriging", "model")) {
        return io::load_model(*model_path);
    }
    const std::string design_path = config.require_string("kriging", "design");
    const kriging::DesignSet design = io::read_design_csv(design_path);
    const double nugget = config.get_double("kriging", "nugget", 0.0);
    const bool normalize = config.get_bool("kriging", "normalize", true);

    const bool explicit_params = config.has("kriging", "tau2") && config.has("kriging", "theta");
    if (explicit_params) {
        kriging::KernelParams params;
        params.beta = config.get_double("kriging", "beta", kriging::fit_mean(design.Y));
        params.tau2 = config.require_double("kriging", "tau2");
        params.theta = config.require_double("kriging", "theta");
        params.nugget = nugget;
        const auto norm = normalize ? kriging::Normalization::fit(design.X)
                                    : kriging::Normalization::identity(design.X.cols());
        return kriging::KrigingModel::build(design, params, norm);
    }
    if (design.Y.size() < 2) {
        // A single observation admits no MLE; any (tau2, theta) interpolates it.
        kriging::KernelParams params;
        params.beta = config.get_double("kriging", "beta", kriging::fit_mean(design.Y));
        params.nugget = nugget;
        return kriging::KrigingModel::build(design, params);
    }
    if (!normalize) {
        const kriging::MleResult mle = kriging::fit_mle(design, nugget);
        return kriging::KrigingModel::build(design, mle.params);
    }
    return kriging::fit_model(design, nugget).model;
}

enum class IndicatorMode { true_sim, plugin, expected };

IndicatorMode parse_indicator_mode(const std::string& name, const std::string& key_path) {
    if (name == "true") return IndicatorMode::true_sim;
    if (name == "plugin") return IndicatorMode::plugin;
    if (name == "expected") return IndicatorMode::expected;
    throw ConfigError("indicator mode must be true|plugin|expected, got '" + name + "'", key_path);
}

importance::Indicator surrogate_indicator(const std::shared_ptr<kriging::KrigingModel>& model,
                                          est::EventSpec spec, IndicatorMode mode) {
    if (mode == IndicatorMode::plugin) {
        return [model, spec](const Eigen::VectorXd& x) {
            return (model->predict(x).mean >= spec.gamma) ? 1.0 : 0.0;
        };
    }
    return [model, spec](const Eigen::VectorXd& x) {
        return est::event_prob_pointwise(*model, x, spec);
    };
}

std::vector<std::string> estimate_row(const est::ProbEstimate& e, std::uint64_t seed) {
    return {std::string(est::method_name(e.method)), io::format_double(e.value),
            io::format_double(e.std_error), std::to_string(e.n_samples), std::to_string(seed)};
}

void print_estimate(const est::ProbEstimate& e) {
    std::cout << est::method_name(e.method) << ": " << io::format_double(e.value)
              << " (std error " << io::format_double(e.std_error) << ", n " << e.n_samples << ")"
              << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

int run_fit(RunContext& ctx) {
    Stopwatch timer(ctx, "fit");
    const kriging::KrigingModel model = surrogate_model(ctx.config);
    io::save_model(ctx.out_dir / "model.json", model);
    ctx.note_artifact("model.json");
    std::cout << "fitted model: n=" << model.size() << " d=" << model.dim()
              << " beta=" << io::format_double(model.params().beta)
              << " tau2=" << io::format_double(model.params().tau2)
              << " theta=" << io::format_double(model.params().theta)
              << " nugget=" << io::format_double(model.params().nugget) << "\n";
    return kExitOk;
}

int run_estimate(RunContext& ctx) {
    const kriging::KrigingModel model = surrogate_model(ctx.config);
    const dist::Distribution F = natural_distribution(ctx.config);
    const est::EventSpec spec = event_spec(ctx.config);
    const auto n = static_cast<Eigen::Index>(ctx.config.get_int("estimate", "n", 10000));
    const std::string mode = ctx.config.get_string("estimate", "mode", "both");
    // Plug-in and expected estimators share one stream so their difference
    // reflects the integrand, not the draws.
    const rng::RngStream stream = ctx.master().split("estimate");

    io::CsvWriter results(ctx.out_dir / "results.csv",
                          {"method", "value", "std_error", "n_samples", "seed"});
    ctx.note_artifact("results.csv");
    if (mode == "plugin" || mode == "both") {
        Stopwatch timer(ctx, "estimate-plugin");
        const auto e = est::estimate_prob_plugin(model, spec, F, n, stream, ctx.threads);
        results.row(estimate_row(e, ctx.seed));
        print_estimate(e);
    }
    if (mode == "expected" || mode == "both") {
        Stopwatch timer(ctx, "estimate-expected");
        const auto e = est::estimate_prob_expected(model, spec, F, n, stream, ctx.threads);
        results.row(estimate_row(e, ctx.seed));
        print_estimate(e);
    }
    if (mode != "plugin" && mode != "expected" && mode != "both") {
        throw ConfigError("estimate.mode must be plugin|expected|both", "estimate.mode");
    }
    return kExitOk;
}

void write_is_trace(RunContext& ctx, const dist::Distribution& f, const dist::Distribution& f_star,
                    const importance::Indicator& indicator, Eigen::Index n,
                    const rng::RngStream& stream) {
    // Reproduces the estimator's per-sample quantities from the same stream.
    const Eigen::MatrixXd points = dist::sample(f_star, stream, n);
    std::vector<std::string> header{"index"};
    for (Eigen::Index k = 0; k < points.cols(); ++k) header.push_back("x" + std::to_string(k + 1));
    header.insert(header.end(), {"indicator", "log_ratio", "summand"});
    io::CsvWriter trace(ctx.out_dir / "trace.csv", header);
    ctx.note_artifact("trace.csv");
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x = points.row(i).transpose();
        const double log_ratio = dist::log_likelihood_ratio(f, f_star, x);
        const double ind = indicator(x);
        const double summand = (ind == 0.0) ? 0.0 : ind * std::exp(log_ratio);
        std::vector<std::string> cells{std::to_string(i)};
        for (Eigen::Index k = 0; k < x.size(); ++k) cells.push_back(io::format_double(x[k]));
        cells.insert(cells.end(), {io::format_double(ind), io::format_double(log_ratio),
                                   io::format_double(summand)});
        trace.row(cells);
    }
}

est::ProbEstimate run_is_stage(RunContext& ctx, const dist::Distribution& f,
                               const dist::Distribution& f_star, IndicatorMode mode,
                               Eigen::Index n, const rng::RngStream& stream) {
    est::ProbEstimate e;
    if (mode == IndicatorMode::true_sim) {
        const importance::Indicator sim = make_simulator(ctx);
        e = importance::is_estimate(sim, f, f_star, n, stream, ctx.threads);
        if (ctx.config.get_bool("run", "trace", false)) {
            write_is_trace(ctx, f, f_star, sim, n, stream);
        }
        return e;
    }
    auto model = std::make_shared<kriging::KrigingModel>(surrogate_model(ctx.config));
    const est::EventSpec spec = event_spec(ctx.config);
    if (mode == IndicatorMode::plugin) {
        e = importance::is_estimate_plugin(*model, spec, f, f_star, n, stream, ctx.threads);
    } else {
        e = importance::is_estimate_expected(*model, spec, f, f_star, n, stream, ctx.threads);
    }
    if (ctx.config.get_bool("run", "trace", false)) {
        write_is_trace(ctx, f, f_star, surrogate_indicator(model, spec, mode), n, stream);
    }
    return e;
}

int run_is(RunContext& ctx) {
    const dist::Distribution f = natural_distribution(ctx.config);
    const dist::Distribution f_star = distribution_from(ctx.config, "f_star");
    const auto n = static_cast<Eigen::Index>(ctx.config.get_int("is", "n", 10000));
    const IndicatorMode mode =
        parse_indicator_mode(ctx.config.get_string("is", "indicator", "true"), "is.indicator");
    const rng::RngStream stream = ctx.master().split("is");

    est::ProbEstimate e;
    {
        Stopwatch timer(ctx, "is");
        e = run_is_stage(ctx, f, f_star, mode, n, stream);
    }
    io::CsvWriter results(ctx.out_dir / "results.csv",
                          {"method", "value", "std_error", "n", "seed", "max_log_ratio"});
    ctx.note_artifact("results.csv");
    auto row = estimate_row(e, ctx.seed);
    row.push_back(io::format_double(e.max_log_ratio));
    results.row(row);
    print_estimate(e);
    if (e.ratio_unstable) {
        std::cout << "warning: max log likelihood ratio " << io::format_double(e.max_log_ratio)
                  << " exceeds " << importance::kLogRatioFlagThreshold
                  << "; the estimate may be unstable\n";
    }
    return kExitOk;
}

struct CERun {
    ce::CEState state;
    dist::Distribution f_star;
};

std::vector<std::string> ce_param_names(const dist::Distribution& d) {
    std::vector<std::string> names;
    const std::function<void(const dist::Distribution&)> walk = [&](const dist::Distribution& m) {
        std::visit(
            [&](const auto& fam) {
                using T = std::decay_t<decltype(fam)>;
                const std::string idx = std::to_string(names.size());
                if constexpr (std::is_same_v<T, dist::Exponential>) {
                    names.push_back("rate" + std::to_string(names.size() + 1));
                } else if constexpr (std::is_same_v<T, dist::Pareto>) {
                    names.push_back("shape" + std::to_string(names.size() + 1));
                } else if constexpr (std::is_same_v<T, dist::GaussianUV>) {
                    names.push_back("mean" + std::to_string(names.size() + 1));
                    names.push_back("sd" + std::to_string(names.size() + 1));
                } else {
                    for (const auto& c : fam.components) walk(c);
                }
            },
            m.value());
    };
    walk(d);
    return names;
}

std::vector<double> ce_param_values(const dist::Distribution& d) {
    std::vector<double> values;
    const std::function<void(const dist::Distribution&)> walk = [&](const dist::Distribution& m) {
        std::visit(
            [&](const auto& fam) {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, dist::Exponential>) {
                    values.push_back(fam.rate);
                } else if constexpr (std::is_same_v<T, dist::Pareto>) {
                    values.push_back(fam.shape);
                } else if constexpr (std::is_same_v<T, dist::GaussianUV>) {
                    values.push_back(fam.mean);
                    values.push_back(fam.sd);
                } else {
                    for (const auto& c : fam.components) walk(c);
                }
            },
            m.value());
    };
    walk(d);
    return values;
}

CERun run_ce_stage(RunContext& ctx, const dist::Distribution& f, const std::string& section) {
    ce::CEOptions options;
    options.n_per_iter =
        static_cast<Eigen::Index>(ctx.config.get_int(section, "n_per_iter", 500));
    options.max_iter = static_cast<int>(ctx.config.get_int(section, "max_iter", 10));
    options.tol = ctx.config.get_double(section, "tol", 1e-3);
    options.smoothing = ctx.config.get_double(section, "smoothing", 0.7);
    options.n_threads = ctx.threads;

    const dist::Distribution theta0 = ctx.config.has("distribution", "family")
                                          ? distribution_from(ctx.config, "family")
                                          : f;
    const std::string mode_name = ctx.config.get_string(
        section, "indicator",
        section == "ce" ? "true"
                        : ctx.config.get_string("pipeline", "indicator", "true"));
    const IndicatorMode mode = parse_indicator_mode(mode_name, section + ".indicator");

    importance::Indicator indicator;
    if (mode == IndicatorMode::true_sim) {
        indicator = make_simulator(ctx);
    } else {
        auto model = std::make_shared<kriging::KrigingModel>(surrogate_model(ctx.config));
        indicator = surrogate_indicator(model, event_spec(ctx.config), mode);
    }

    CERun run{ce::ce_iterate(indicator, f, theta0, options, ctx.master().split("ce")),
              theta0};
    run.f_star = run.state.theta_s;

    std::vector<std::string> header{"iteration"};
    for (const auto& name : ce_param_names(theta0)) header.push_back(name);
    header.insert(header.end(), {"objective", "hits"});
    io::CsvWriter history(ctx.out_dir / "ce_history.csv", header);
    ctx.note_artifact("ce_history.csv");
    for (std::size_t i = 0; i < run.state.history.size(); ++i) {
        const auto& record = run.state.history[i];
        std::vector<std::string> cells{std::to_string(i + 1)};
        for (double v : ce_param_values(record.theta)) cells.push_back(io::format_double(v));
        cells.push_back(io::format_double(record.objective));
        cells.push_back(std::to_string(record.hits));
        history.row(cells);
    }

    std::ofstream f_star_file(ctx.out_dir / "f_star.txt");
    f_star_file << dist::format(run.f_star) << "\n";
    ctx.note_artifact("f_star.txt");
    return run;
}

int run_ce(RunContext& ctx) {
    const dist::Distribution f = natural_distribution(ctx.config);
    Stopwatch timer(ctx, "ce");
    const CERun run = run_ce_stage(ctx, f, "ce");
    std::cout << "cross entropy finished after " << run.state.iteration << " iteration(s)"
              << (run.state.converged ? " (converged)" : "") << "\n"
              << "f_star: " << dist::format(run.f_star) << "\n";
    return kExitOk;
}

int run_pipeline(RunContext& ctx) {
    const dist::Distribution f = natural_distribution(ctx.config);
    const IndicatorMode mode = parse_indicator_mode(
        ctx.config.get_string("pipeline", "indicator", "true"), "pipeline.indicator");
    const auto n = static_cast<Eigen::Index>(ctx.config.get_int("pipeline", "n", 100000));

    // Accelerated-evaluation pipeline: tilt the disturbance model toward the
    // event with cross entropy, test under the tilted distribution, and skew
    // the results back through the importance-sampling weights.
    CERun ce_run = [&] {
        Stopwatch timer(ctx, "pipeline-ce");
        return run_ce_stage(ctx, f, "pipeline");
    }();

    est::ProbEstimate e;
    {
        Stopwatch timer(ctx, "pipeline-is");
        e = run_is_stage(ctx, f, ce_run.f_star, mode, n, ctx.master().split("is"));
    }

    io::CsvWriter results(ctx.out_dir / "results.csv",
                          {"method", "value", "std_error", "n", "seed", "max_log_ratio"});
    ctx.note_artifact("results.csv");
    auto row = estimate_row(e, ctx.seed);
    row.push_back(io::format_double(e.max_log_ratio));
    results.row(row);
    print_estimate(e);
    return kExitOk;
}

int run_adapt(RunContext& ctx) {
    kriging::KrigingModel model = surrogate_model(ctx.config);
    const dist::Distribution F = natural_distribution(ctx.config);
    const est::EventSpec spec = event_spec(ctx.config);
    const importance::Indicator simulator = make_simulator(ctx);

    adaptive::AdaptiveOptions options;
    options.criterion =
        adaptive::parse_criterion(ctx.config.get_string("adapt", "criterion", "pnt1"));
    options.budget = static_cast<int>(ctx.config.get_int("adapt", "budget", 10));
    options.pool_size = static_cast<Eigen::Index>(ctx.config.get_int("adapt", "pool", 1000));
    options.quad_nodes = static_cast<int>(ctx.config.get_int("adapt", "quad_nodes", 15));
    options.n_threads = ctx.threads;

    adaptive::CandidateGenerator generator;
    const std::string cand_kind = ctx.config.get_string("adapt", "candidates", "grid");
    if (cand_kind == "grid") {
        const auto parse_list = [&](const std::string& key) {
            std::vector<double> values;
            std::istringstream in(ctx.config.require_string("adapt", key));
            std::string item;
            while (std::getline(in, item, ',')) values.push_back(std::stod(item));
            return values;
        };
        const auto lo = parse_list("grid_lo");
        const auto hi = parse_list("grid_hi");
        const auto counts_raw = parse_list("grid_counts");
        if (lo.size() != hi.size() || lo.size() != counts_raw.size()) {
            throw ConfigError("adapt.grid_lo/grid_hi/grid_counts must have equal lengths",
                              "adapt.grid_lo");
        }
        std::vector<int> counts;
        for (double c : counts_raw) counts.push_back(static_cast<int>(c));
        generator = adaptive::grid_candidates(
            Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
            Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size())),
            counts);
    } else if (cand_kind == "draws") {
        const auto count =
            static_cast<Eigen::Index>(ctx.config.get_int("adapt", "draw_count", 100));
        generator = adaptive::draw_candidates(F, count);
    } else {
        throw ConfigError("adapt.candidates must be grid|draws", "adapt.candidates");
    }

    adaptive::AdaptiveResult result = [&] {
        Stopwatch timer(ctx, "adapt");
        return adaptive::adaptive_loop(std::move(model), generator, spec, F, simulator, options,
                                       ctx.master().split("adapt"));
    }();

    const Eigen::Index d = result.model.dim();
    std::vector<std::string> header{"iteration", "criterion", "candidate_index"};
    for (Eigen::Index k = 0; k < d; ++k) header.push_back("x" + std::to_string(k + 1));
    header.insert(header.end(),
                  {"criterion_value", "chosen_index", "response", "sim_failed", "design_size"});
    io::CsvWriter audit(ctx.out_dir / "audit.csv", header);
    ctx.note_artifact("audit.csv");
    for (const auto& entry : result.log) {
        for (Eigen::Index i = 0; i < entry.candidates.rows(); ++i) {
            std::vector<std::string> cells{std::to_string(entry.iteration),
                                           std::string(adaptive::criterion_name(entry.criterion)),
                                           std::to_string(i)};
            for (Eigen::Index k = 0; k < d; ++k) {
                cells.push_back(io::format_double(entry.candidates(i, k)));
            }
            cells.push_back(io::format_double(entry.criterion_values[i]));
            cells.push_back(std::to_string(entry.chosen_index));
            if (i == entry.chosen_index && !entry.simulator_failed) {
                cells.push_back(io::format_double(entry.response));
            } else {
                cells.push_back("");
            }
            cells.push_back((i == entry.chosen_index && entry.simulator_failed) ? "1" : "0");
            cells.push_back(std::to_string(entry.design_size_after));
            audit.row(cells);
        }
    }

    io::write_design_csv(ctx.out_dir / "design.csv", result.model.design());
    ctx.note_artifact("design.csv");
    io::save_model(ctx.out_dir / "model.json", result.model);
    ctx.note_artifact("model.json");
    std::cout << "adaptive loop added " << options.budget << " point(s); design size "
              << result.model.size() << "\n";
    return kExitOk;
}

int run_simulate(RunContext& ctx) {
    const std::string points_path = ctx.config.require_string("simulate", "points");
    const io::Table table = io::read_table_csv(points_path);
    const std::string type = ctx.config.get_string("scenario", "type", "lane_change");

    Eigen::MatrixXd points;
    std::vector<std::string> coord_names;
    if (type == "lane_change") {
        coord_names = {"ttc_inv", "r_inv"};
        points.resize(table.values.rows(), 2);
        points.col(0) = table.values.col(table.column_index("ttc_inv"));
        points.col(1) = table.values.col(table.column_index("r_inv"));
    } else {
        coord_names = table.columns;
        points = table.values;
    }

    const importance::Indicator simulator = make_simulator(ctx);
    Eigen::VectorXd responses(points.rows());
    {
        Stopwatch timer(ctx, "simulate");
        par::parallel_for(points.rows(), ctx.threads, [&](std::int64_t i) {
            responses[i] = simulator(points.row(i).transpose());
        });
    }

    std::vector<std::string> header = coord_names;
    header.push_back("indicator");
    io::CsvWriter out(ctx.out_dir / "indicators.csv", header);
    ctx.note_artifact("indicators.csv");
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        std::vector<std::string> cells;
        for (Eigen::Index k = 0; k < points.cols(); ++k) {
            cells.push_back(io::format_double(points(i, k)));
        }
        cells.push_back(io::format_double(responses[i]));
        out.row(cells);
    }
    std::cout << "simulated " << points.rows() << " point(s), " << responses.sum()
              << " event(s)\n";
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App cli{"Kriging-surrogate rare-event estimation toolkit"};
    cli.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&](CLI::App* sub, bool with_indicator) {
        sub->add_option("-c,--config", args.config_path, "run configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--set", args.overrides, "override: section.key=value");
        sub->add_option("--seed", args.seed, "master seed (overrides run.seed)");
        sub->add_option("--threads", args.threads, "worker pool size (overrides run.threads)");
        sub->add_option("--out", args.out, "output directory (overrides run.out)");
        if (with_indicator) {
            sub->add_option("--indicator", args.indicator, "indicator mode: true|plugin|expected");
        }
    };

    add_common(cli.add_subcommand("fit", "fit a Kriging model from a design CSV"), false);
    add_common(cli.add_subcommand("estimate", "surrogate event-probability estimate"), false);
    add_common(cli.add_subcommand("is", "importance-sampling estimate"), true);
    add_common(cli.add_subcommand("ce", "cross-entropy search for the tilted distribution"), true);
    add_common(cli.add_subcommand("adapt", "adaptive design-point selection loop"), false);
    add_common(cli.add_subcommand("simulate", "batch indicator evaluation"), false);
    add_common(cli.add_subcommand("pipeline", "cross entropy + importance sampling, end to end"),
               true);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const std::string subcommand = cli.get_subcommands().front()->get_name();
    try {
        RunContext ctx = make_context(args, subcommand);
        int code = kExitRuntime;
        try {
            if (subcommand == "fit") code = run_fit(ctx);
            else if (subcommand == "estimate") code = run_estimate(ctx);
            else if (subcommand == "is") code = run_is(ctx);
            else if (subcommand == "ce") code = run_ce(ctx);
            else if (subcommand == "adapt") code = run_adapt(ctx);
            else if (subcommand == "simulate") code = run_simulate(ctx);
            else if (subcommand == "pipeline") code = run_pipeline(ctx);
        } catch (...) {
            write_manifest(ctx, subcommand);
            throw;
        }
        write_manifest(ctx, subcommand);
        std::cout << "run directory: " << ctx.out_dir.string() << "\n";
        return code;
    } catch (const ConfigError& e) {
        std::cerr << "config error";
        if (!e.key_path().empty()) std::cerr << " [" << e.key_path() << "]";
        std::cerr << ": " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace accel::app
