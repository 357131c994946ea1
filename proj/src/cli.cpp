#include "cohere/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cohere/evaluation.hpp"
#include "cohere/io.hpp"
#include "cohere/metrics.hpp"
#include "cohere/simulate.hpp"

namespace cohere::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Inputs {
    std::string panel;
    std::string hierarchy;
    std::string forecasts;
    std::string output = ".";
};

struct SamplerFlags {
    GibbsConfig gibbs;
    std::vector<std::string> factor_levels;
    std::vector<std::string> combination_series;
};

void add_inputs(CLI::App* app, Inputs& in, bool forecasts) {
    app->add_option("--panel", in.panel, "atomic panel CSV")->required()->check(CLI::ExistingFile);
    app->add_option("--hierarchy", in.hierarchy, "hierarchy JSON")->required()->check(CLI::ExistingFile);
    if (forecasts) app->add_option("--forecasts", in.forecasts, "base forecast CSV")->required()->check(CLI::ExistingFile);
    app->add_option("--output", in.output, "output directory")->capture_default_str();
}

void add_sampler(CLI::App* app, SamplerFlags& f) {
    GibbsConfig& g = f.gibbs;
    app->add_option("--seed", g.seed, "random seed")->capture_default_str();
    app->add_option("--warmup", g.warmup, "warm-up sweeps")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--samples", g.samples, "post-warm-up sweeps")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--thin", g.thin, "keep every thin-th sweep")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--chains", g.chains, "independent chains")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--discount", g.discount, "DLM discount factor")->capture_default_str()->check(CLI::Range(1e-6, 1.0));
    app->add_option("--horizon", g.horizon, "forecast horizon")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--seasonal-period", g.seasonal_period, "seasonal period (0 for none)")->capture_default_str();
    app->add_option("--factor-levels", f.factor_levels, "comma-separated factor levels")->delimiter(',');
    app->add_option("--combination-series", f.combination_series, "comma-separated node ids for the weight regression")
        ->delimiter(',');
}

GibbsConfig finish(const SamplerFlags& f) {
    GibbsConfig g = f.gibbs;
    g.factor_levels = f.factor_levels;
    g.combination_series = f.combination_series;
    g.validate();
    return g;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

void check_consecutive(const Panel& p) {
    for (std::size_t t = 1; t < p.dates.size(); ++t)
        if (p.dates[t] - p.dates[t - 1] != 1)
            throw std::runtime_error("panel dates must be consecutive months (gap after " + p.dates[t - 1].str() + ")");
}

// Panel columns reordered to the hierarchy's atomic order.
Panel align(const Panel& p, const Hierarchy& h) {
    Panel out;
    out.dates = p.dates;
    out.ids = h.atomic_ids();
    out.values.resize(p.periods(), static_cast<Eigen::Index>(out.ids.size()));
    for (std::size_t j = 0; j < out.ids.size(); ++j) {
        const auto it = std::find(p.ids.begin(), p.ids.end(), out.ids[j]);
        if (it == p.ids.end()) throw std::runtime_error("panel has no column for atomic series '" + out.ids[j] + "'");
        out.values.col(static_cast<Eigen::Index>(j)) = p.values.col(it - p.ids.begin());
    }
    if (p.ids.size() != out.ids.size()) throw std::runtime_error("panel has columns that are not atomic series of the hierarchy");
    return out;
}

json config_json(const GibbsConfig& g) {
    return {{"seed", g.seed},
            {"warmup", g.warmup},
            {"samples", g.samples},
            {"thin", g.thin},
            {"chains", g.chains},
            {"discount", g.discount},
            {"horizon", g.horizon},
            {"seasonal_period", g.seasonal_period},
            {"factor_levels", g.factor_levels},
            {"combination_series", g.combination_series}};
}

int reconcile(const Inputs& in, const SamplerFlags& flags) {
    const GibbsConfig cfg = finish(flags);
    const Hierarchy h = io::load_hierarchy(in.hierarchy);
    const Panel panel = align(io::load_panel(in.panel), h);
    check_consecutive(panel);
    const ForecastStore store = io::load_base_forecasts(in.forecasts, h);
    const BaseForecasts base = extract_base_forecasts(store, panel.dates, cfg.horizon);
    ensure_dir(in.output);

    const auto start = std::chrono::steady_clock::now();
    const PosteriorSamples ps = run_reconciliation(cfg, h, panel, base);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path out(in.output);
    io::write_posterior_samples(out / "posterior_samples.csv", ps, h);
    io::write_rho(out / "rho.csv", ps);
    io::write_weights(out / "weights.csv", ps);

    json diag;
    diag["seed"] = cfg.seed;
    diag["config"] = config_json(cfg);
    diag["origin"] = panel.dates.back().str();
    diag["draws"] = ps.draw_count();
    diag["rhat"] = ps.rhat;
    diag["weight_levels"] = ps.weight_levels;
    std::vector<std::string> comb;
    for (std::size_t node : ps.combination_nodes) comb.push_back(ps.node_ids[node]);
    diag["combination_series"] = comb;
    diag["invariants"] = {{"sweeps", ps.invariants.sweeps},
                          {"max_coherence_error", ps.invariants.max_coherence_error},
                          {"max_weight_sum_error", ps.invariants.max_weight_sum_error},
                          {"min_rho", ps.invariants.min_rho},
                          {"max_rho", ps.invariants.max_rho}};
    io::write_text(out / "diagnostics.json", diag.dump(2) + "\n");
    io::write_text(out / "timing.json", json{{"runtime_seconds", seconds}, {"origin", panel.dates.back().str()}}.dump(2) + "\n");
    std::cerr << "reconcile: " << ps.draw_count() << " draws written to " << in.output << '\n';
    return 0;
}

int evaluate(const Inputs& in, const SamplerFlags& flags, int window, const std::vector<std::string>& methods,
             int max_origins, const std::string& split_level) {
    EvaluationConfig ec;
    ec.gibbs = finish(flags);
    ec.window = window;
    ec.horizon = ec.gibbs.horizon;
    ec.max_origins = max_origins;
    ec.split_level = split_level;
    ec.methods.clear();
    for (const auto& m : methods) ec.methods.push_back(parse_method(m));

    const Hierarchy h = io::load_hierarchy(in.hierarchy);
    const Panel panel = align(io::load_panel(in.panel), h);
    check_consecutive(panel);
    const ForecastStore store = io::load_base_forecasts(in.forecasts, h);
    ensure_dir(in.output);

    const MetricReport report = rolling_evaluate(ec, h, panel, store);
    const fs::path out(in.output);
    io::write_metrics(out / "metrics.csv", report);
    io::write_origin_scores(out / "origin_scores.csv", report);
    json timing;
    std::vector<std::string> origins;
    for (const auto& o : report.origins) origins.push_back(o.str());
    timing["origins"] = origins;
    timing["reconcile_seconds"] = report.reconcile_seconds;
    io::write_text(out / "timing.json", timing.dump(2) + "\n");
    std::cerr << "evaluate: " << report.origins.size() << " origins scored, " << report.rows.size() << " metric rows\n";
    return 0;
}

int simulate(const SimOptions& opts, int horizon, const std::string& output) {
    const SimSpec spec = make_sim_spec(opts);
    const SimulatedData data = simulate_dataset(spec, horizon);
    ensure_dir(output);
    const fs::path out(output);
    io::write_panel(out / "panel.csv", data.panel.atomic);
    io::write_hierarchy(out / "hierarchy.json", spec.hierarchy);
    io::write_base_forecasts(out / "base_forecasts.csv", data.forecasts, spec.hierarchy);
    Panel signal = data.panel.atomic;
    signal.values = data.panel.signal;
    io::write_panel(out / "signal.csv", signal);
    io::write_panel(out / "holdout.csv", data.holdout);
    io::write_truth(out / "truth.json", spec, data);
    std::cerr << "simulate: " << spec.hierarchy.atomic_count() << " series x " << spec.periods << " months written to "
              << output << '\n';
    return 0;
}

int baseline(const std::string& hierarchy_path, const std::string& forecasts_path, const std::string& method,
             const std::string& output) {
    const Hierarchy h = io::load_hierarchy(hierarchy_path);
    const ForecastStore store = io::load_base_forecasts(forecasts_path, h);
    const Method m = parse_method(method);
    if (m == Method::He) throw std::runtime_error("baseline: method must be base or ols");
    ensure_dir(output);
    const auto nodes = static_cast<Eigen::Index>(h.node_count());

    std::ostringstream csv;
    csv << "origin,horizon,series_id,value\n";
    std::size_t written = 0, skipped = 0;
    for (const Month& origin : store.origins()) {
        for (int hz = 1; hz <= store.max_horizon(); ++hz) {
            Eigen::VectorXd y = Eigen::VectorXd::Constant(nodes, kMissing);
            bool any = false;
            for (Eigen::Index i = 0; i < nodes; ++i)
                if (auto v = store.get(origin, hz, static_cast<std::size_t>(i))) {
                    y(i) = *v;
                    any = true;
                }
            if (!any) continue;
            Eigen::VectorXd out = y;
            if (m == Method::Ols) {
                try {
                    out = ols_reconcile_partial(y, h.summing_matrix());
                } catch (const std::invalid_argument&) {
                    ++skipped;
                    continue;
                }
            }
            for (Eigen::Index i = 0; i < nodes; ++i) {
                if (std::isnan(out(i))) continue;
                csv << origin.str() << ',' << hz << ',' << h.nodes()[static_cast<std::size_t>(i)].id << ','
                    << io::format_double(out(i)) << '\n';
            }
            ++written;
        }
    }
    io::write_text(fs::path(output) / "reconciled_forecasts.csv", csv.str());
    std::cerr << "baseline: " << written << " forecast vectors written";
    if (skipped > 0) std::cerr << ", " << skipped << " skipped (too few nodes to identify the atomic series)";
    std::cerr << '\n';
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Bayesian forecast reconciliation for hierarchical time series"};
    app.require_subcommand(1);

    Inputs rin, ein;
    SamplerFlags rflags, eflags;
    auto* rec = app.add_subcommand("reconcile", "sample coherent forecasts at the panel's last month");
    add_inputs(rec, rin, true);
    add_sampler(rec, rflags);

    auto* ev = app.add_subcommand("evaluate", "rolling-origin evaluation of base, ols and he forecasts");
    add_inputs(ev, ein, true);
    add_sampler(ev, eflags);
    int window = 96, max_origins = 0;
    std::vector<std::string> methods{"base", "ols", "he"};
    std::string split_level;
    ev->add_option("--window", window, "estimation window length")->capture_default_str()->check(CLI::PositiveNumber);
    ev->add_option("--methods", methods, "comma-separated methods")->delimiter(',')->capture_default_str();
    ev->add_option("--max-origins", max_origins, "score only the earliest N origins (0 = all)")->capture_default_str();
    ev->add_option("--split-level", split_level, "level whose labels split nested levels' R2 rows");

    SimOptions sim;
    int sim_horizon = 12;
    std::string sim_output = ".";
    std::size_t atomic = sim.atomic, groups = sim.groups;
    long long periods = sim.periods;
    auto* si = app.add_subcommand("simulate", "generate a synthetic panel, hierarchy and base forecasts");
    si->add_option("--seed", sim.seed, "random seed")->capture_default_str();
    si->add_option("--atomic", atomic, "number of atomic series")->capture_default_str()->check(CLI::PositiveNumber);
    si->add_option("--groups", groups, "number of middle-level groups (< 2 for none)")->capture_default_str();
    si->add_option("--periods", periods, "number of months")->capture_default_str()->check(CLI::PositiveNumber);
    si->add_option("--seasonal-period", sim.seasonal_period, "seasonal period (0 for none)")->capture_default_str();
    si->add_option("--rho", sim.rho, "calibration: one value or one per level, top first")->delimiter(',')->capture_default_str();
    si->add_option("--common-share", sim.common_share, "share of residual variance from factors")->capture_default_str();
    si->add_option("--level-noise", sim.level_noise, "random-walk level sd as a fraction of the level")->capture_default_str();
    si->add_option("--horizon", sim_horizon, "forecast horizon")->capture_default_str()->check(CLI::PositiveNumber);
    si->add_option("--output", sim_output, "output directory")->capture_default_str();

    std::string bl_hierarchy, bl_forecasts, bl_method = "ols", bl_output = ".";
    auto* bl = app.add_subcommand("baseline", "reconcile every base forecast vector with a baseline method");
    bl->add_option("--hierarchy", bl_hierarchy, "hierarchy JSON")->required()->check(CLI::ExistingFile);
    bl->add_option("--forecasts", bl_forecasts, "base forecast CSV")->required()->check(CLI::ExistingFile);
    bl->add_option("--method", bl_method, "base or ols")->capture_default_str();
    bl->add_option("--output", bl_output, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (rec->parsed()) return reconcile(rin, rflags);
        if (ev->parsed()) return evaluate(ein, eflags, window, methods, max_origins, split_level);
        if (si->parsed()) {
            sim.atomic = atomic;
            sim.groups = groups;
            sim.periods = static_cast<Eigen::Index>(periods);
            return simulate(sim, sim_horizon, sim_output);
        }
        if (bl->parsed()) return baseline(bl_hierarchy, bl_forecasts, bl_method, bl_output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace cohere::cli
