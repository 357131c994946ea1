#include "cohere/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "cohere/calibration.hpp"
#include "cohere/combination.hpp"
#include "cohere/covariance.hpp"
#include "cohere/diagnostics.hpp"
#include "cohere/dlm.hpp"
#include "cohere/factor_model.hpp"
#include "cohere/hierarchy.hpp"
#include "cohere/lbe.hpp"
#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

void GibbsConfig::validate() const {
    if (warmup < 0) throw std::invalid_argument("gibbs: warmup must be >= 0");
    if (thin < 1) throw std::invalid_argument("gibbs: thin must be >= 1");
    if (samples < thin) throw std::invalid_argument("gibbs: samples must be >= thin");
    if (chains < 1) throw std::invalid_argument("gibbs: chains must be >= 1");
    if (horizon < 1) throw std::invalid_argument("gibbs: horizon must be >= 1");
    if (!(initial_rho >= 0.0 && initial_rho <= 1.0)) throw std::invalid_argument("gibbs: initial rho must be in [0, 1]");
}

Eigen::MatrixXd PosteriorSamples::mean_path() const {
    if (paths.empty()) return {};
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(paths.front().rows(), paths.front().cols());
    for (const auto& p : paths) acc += p;
    return acc / static_cast<double>(paths.size());
}

namespace {

enum Block : std::uint64_t { kTs = 0, kFm = 1, kCal = 2, kProp = 3, kComb = 4 };

// x S' with missing cells propagated only to the nodes that contain them.
Eigen::MatrixXd aggregate_rows(const Eigen::MatrixXd& x, const Eigen::MatrixXd& S) {
    const Eigen::MatrixXd filled = x.array().isNaN().select(0.0, x);
    Eigen::MatrixXd out = filled * S.transpose();
    const Eigen::MatrixXd miss = x.array().isNaN().cast<double>().matrix() * S.transpose();
    for (Eigen::Index t = 0; t < out.rows(); ++t)
        for (Eigen::Index i = 0; i < out.cols(); ++i)
            if (miss(t, i) > 0.0) out(t, i) = kMissing;
    return out;
}

struct Problem {
    const GibbsConfig* config = nullptr;
    const Hierarchy* h = nullptr;
    const Panel* panel = nullptr;
    const BaseForecasts* base = nullptr;
    Eigen::MatrixXd S;
    FilterState filter;
    std::vector<bool> active;  // per node
    struct Level {
        std::size_t index;
        std::vector<std::size_t> nodes;  // active nodes of the level
        std::vector<Eigen::Index> cols;  // same, as Eigen indices
        Eigen::MatrixXd S;
    };
    std::vector<Level> levels;
    std::vector<std::size_t> selected;
    Eigen::MatrixXd S_sel;
    std::vector<std::size_t> tracked_rho;
};

struct ChainResult {
    std::vector<Eigen::MatrixXd> paths;
    std::vector<Eigen::VectorXd> rho;
    std::vector<double> rho0;
    std::vector<Eigen::VectorXd> weights;
    std::vector<Eigen::VectorXd> factor_variance;
    Eigen::MatrixXd loadings_sum;
    Eigen::MatrixXd factor_cov_sum;
    std::vector<std::string> trace;
    InvariantSummary invariants;
};

ChainResult run_chain(const Problem& pb, std::uint64_t chain) {
    const GibbsConfig& cfg = *pb.config;
    const Hierarchy& h = *pb.h;
    const auto T = pb.panel->periods();
    const auto n = static_cast<Eigen::Index>(h.atomic_count());
    const auto m = static_cast<Eigen::Index>(h.node_count());
    const int H = cfg.horizon;
    const Eigen::MatrixXd& b = pb.panel->values;

    FactorModel fm = FactorModel::initial(h, T);
    SeriesCovariance obs_cov = SeriesCovariance::diagonal(pb.filter.obs_scale);
    Eigen::MatrixXd var_r = pb.filter.obs_scale.asDiagonal();
    CalibrationState cal = CalibrationState::initial(m, cfg.initial_rho);
    CombinationState comb;
    const auto k = static_cast<Eigen::Index>(pb.levels.size());
    if (k > 0) comb = CombinationState::initial(k, pb.selected, pb.S_sel * var_r * pb.S_sel.transpose());

    ChainResult out;
    out.loadings_sum = Eigen::MatrixXd::Zero(n, fm.factor_count());
    out.factor_cov_sum = Eigen::MatrixXd::Zero(fm.factor_count(), fm.factor_count());
    const bool check_psd = n <= 200;
    const std::vector<std::size_t> factor_nodes = h.factor_nodes();

    const int sweeps = cfg.warmup + cfg.samples;
    for (int s = 0; s < sweeps; ++s) {
        const auto su = static_cast<std::uint64_t>(s);
        auto trace = [&](const char* block) {
            if (cfg.record_trace) out.trace.emplace_back(block);
        };

        // ts: states given the previous residual covariance.
        trace("ts");
        Rng rng_ts = Rng::stream(cfg.seed, {chain, su, kTs});
        const StateDraw states = backward_sample(pb.filter, obs_cov, rng_ts);
        const Eigen::MatrixXd signal = fitted_signal(pb.filter.spec, states);
        const Eigen::MatrixXd r = b - signal;
        const Eigen::MatrixXd prior_path = forecast_prior(pb.filter, states, H, obs_cov, rng_ts);

        // fm: factor model for the standardized residuals.
        trace("fm");
        Rng rng_fm = Rng::stream(cfg.seed, {chain, su, kFm});
        const Standardized rs = standardize(r);
        const FactorDraw fd = sample_factors(rs.values, fm.loadings, fm.cs_precision, rng_fm);
        Eigen::MatrixXd f = rotate_factors(fd.factors, fm.blocks);
        const Eigen::MatrixXd sums = aggregate_rows(r, h.rows(factor_nodes));
        f = enforce_sign(f, sums.array().isNaN().select(0.0, sums));
        const LoadingsDraw ld = sample_loadings(rs.values, f, fm.mask, fm.loading_prior_sd, fm.ts_precision, rng_fm);
        fm.factors = f;
        fm.cs_precision = fd.cs_precision;
        fm.loadings = ld.loadings;
        fm.ts_precision = ld.ts_precision;
        fm.idiosyncratic = ld.ts_precision.cwiseInverse();
        fm.factor_cov = block_covariance(f, fm.blocks);
        var_r = covariance(fm.loadings, fm.factor_cov, fm.idiosyncratic, rs.scales);
        obs_cov = fm.series_covariance(rs.scales);

        // cal: calibration of the nodes with base forecasts.
        trace("cal");
        Rng rng_cal = Rng::stream(cfg.seed, {chain, su, kCal});
        const Eigen::MatrixXd node_signal = signal * pb.S.transpose();
        const Eigen::MatrixXd node_r = aggregate_rows(r, pb.S);
        Eigen::MatrixXd r_std = Eigen::MatrixXd::Constant(T, m, kMissing);
        Eigen::MatrixXd g_std = Eigen::MatrixXd::Constant(T, m, kMissing);
        Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(m), g_scale = Eigen::VectorXd::Ones(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!pb.active[static_cast<std::size_t>(i)]) continue;
            const Standardized sr = standardize(node_r.col(i));
            const Standardized sg = standardize(pb.base->fitted.col(i) - node_signal.col(i));
            r_std.col(i) = sr.values;
            g_std.col(i) = sg.values;
            g_mean(i) = sg.means(0);
            g_scale(i) = sg.scales(0);
        }
        cal = sample_calibration(r_std, g_std, cal, rng_cal, pb.active);

        // prop: per-level linear Bayes updates, in sample and at the forecast horizons.
        trace("prop");
        Rng rng_prop = Rng::stream(cfg.seed, {chain, su, kProp});
        std::vector<Eigen::MatrixXd> fitted_updates;
        std::vector<std::vector<Eigen::VectorXd>> draws(static_cast<std::size_t>(H));
        for (const auto& lv : pb.levels) {
            Eigen::VectorXd rho(static_cast<Eigen::Index>(lv.cols.size()));
            for (std::size_t i = 0; i < lv.cols.size(); ++i) rho(static_cast<Eigen::Index>(i)) = cal.rho(lv.cols[i]);
            const ForecastMoments mom = forecast_moments(var_r, rho, lv.S);
            const Eigen::MatrixXd K = lbe_gain(mom);
            const Eigen::MatrixXd post_cov = symmetrize(var_r - K * mom.cov_rg.transpose());
            if (check_psd) {
                const double margin =
                    min_eigenvalue(var_r - post_cov) / std::max(1.0, var_r.cwiseAbs().maxCoeff());
                out.invariants.min_psd_margin = std::min(out.invariants.min_psd_margin, margin);
                ++out.invariants.psd_checks;
                if (margin < -1e-8) throw InvariantViolation("gibbs: level update covariance exceeds Var(r)");
            }

            Eigen::MatrixXd g_in(T, static_cast<Eigen::Index>(lv.cols.size()));
            for (std::size_t i = 0; i < lv.cols.size(); ++i) {
                const auto c = static_cast<Eigen::Index>(i);
                g_in.col(c) = g_std.col(lv.cols[i]);
            }
            g_in = g_in.array().isNaN().select(0.0, g_in);
            fitted_updates.push_back(g_in * K.transpose());

            const Eigen::MatrixXd L = cholesky_lower(post_cov, "level update covariance");
            for (int hz = 0; hz < H; ++hz) {
                const Eigen::VectorXd node_prior = lv.S * prior_path.row(hz).transpose();
                Eigen::VectorXd g(static_cast<Eigen::Index>(lv.cols.size()));
                for (std::size_t i = 0; i < lv.cols.size(); ++i) {
                    const auto c = static_cast<Eigen::Index>(i);
                    const Eigen::Index node = lv.cols[i];
                    g(c) = (pb.base->forecasts(hz, node) - node_prior(c) - g_mean(node)) / g_scale(node);
                }
                draws[static_cast<std::size_t>(hz)].push_back(K * g + L * rng_prop.normal_vector(n));
            }
        }

        // comb: shared weights and SUR precision, then the coherent draw.
        trace("comb");
        Rng rng_comb = Rng::stream(cfg.seed, {chain, su, kComb});
        if (k > 0) {
            const CombinationDesign design = assemble_design(fitted_updates, h, pb.selected, r);
            comb.set_prior_covariance(pb.S_sel * var_r * pb.S_sel.transpose());
            comb.weights = sample_weights(design, comb, rng_comb);
            comb.precision = sample_H(sur_residuals(design, comb.weights), comb.prior_dof, comb.prior_scale, rng_comb);
        }
        Eigen::MatrixXd path(H, m);
        for (int hz = 0; hz < H; ++hz)
            path.row(hz) = combine(prior_path.row(hz).transpose(), draws[static_cast<std::size_t>(hz)], comb.weights, pb.S)
                               .transpose();

        // Invariants.
        InvariantSummary& inv = out.invariants;
        ++inv.sweeps;
        const Eigen::MatrixXd atomic_part = path.rightCols(n);
        const double coh = (path - atomic_part * pb.S.transpose()).cwiseAbs().maxCoeff() /
                           std::max(1.0, path.cwiseAbs().maxCoeff());
        inv.max_coherence_error = std::max(inv.max_coherence_error, coh);
        if (!(coh <= 1e-10)) throw InvariantViolation("gibbs: incoherent posterior draw");
        if (k > 0) {
            const double ws = std::abs(comb.weights.sum() - 1.0);
            inv.max_weight_sum_error = std::max(inv.max_weight_sum_error, ws);
            if (!(ws <= 1e-4)) throw InvariantViolation("gibbs: combination weights do not sum to one");
        }
        inv.min_rho = std::min(inv.min_rho, cal.rho.minCoeff());
        inv.max_rho = std::max(inv.max_rho, cal.rho.maxCoeff());
        if (cal.rho.minCoeff() < 0.0 || cal.rho.maxCoeff() > 1.0) throw InvariantViolation("gibbs: rho outside [0, 1]");

        if (s >= cfg.warmup && (s - cfg.warmup) % cfg.thin == 0) {
            out.paths.push_back(path);
            out.rho.push_back(cal.rho);
            out.rho0.push_back(cal.rho0);
            out.weights.push_back(comb.weights);
            out.factor_variance.push_back(fm.factor_cov.diagonal());
            out.loadings_sum += fm.loadings;
            out.factor_cov_sum += fm.factor_cov;
        }
    }
    return out;
}

Problem setup(const GibbsConfig& cfg, const Hierarchy& h, const Panel& panel, const BaseForecasts& base) {
    Problem pb;
    pb.config = &cfg;
    pb.h = &h;
    pb.panel = &panel;
    pb.base = &base;
    pb.S = h.summing_matrix();
    const auto m = static_cast<Eigen::Index>(h.node_count());
    if (panel.ids != h.atomic_ids()) throw std::invalid_argument("gibbs: panel columns must match the hierarchy's atomic series");
    if (base.fitted.rows() != panel.periods() || base.fitted.cols() != m)
        throw std::invalid_argument("gibbs: in-sample base forecasts must be T x m");
    if (base.forecasts.rows() != cfg.horizon || base.forecasts.cols() != m)
        throw std::invalid_argument("gibbs: base forecasts must be H x m");

    pb.filter = forward_filter(build_dlm_spec(cfg.seasonal_period, cfg.discount), panel);

    pb.active.assign(static_cast<std::size_t>(m), false);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index observed = (base.fitted.col(i).array().isFinite()).count();
        pb.active[static_cast<std::size_t>(i)] = observed >= 3 && base.forecasts.col(i).allFinite();
    }
    for (std::size_t j = 0; j < h.level_count(); ++j) {
        Problem::Level lv{j, {}, {}, {}};
        for (std::size_t node : h.levels()[j].nodes)
            if (pb.active[node]) {
                lv.nodes.push_back(node);
                lv.cols.push_back(static_cast<Eigen::Index>(node));
            }
        if (lv.nodes.empty()) continue;
        lv.S = h.rows(lv.nodes);
        pb.levels.push_back(std::move(lv));
    }

    std::vector<std::size_t> selected;
    if (cfg.combination_series.empty()) {
        selected = h.factor_nodes();
    } else {
        for (const auto& id : cfg.combination_series) {
            auto idx = h.node_index(id);
            if (!idx) throw std::invalid_argument("gibbs: unknown combination series '" + id + "'");
            selected.push_back(*idx);
        }
    }
    pb.selected = independent_nodes(h, selected);
    if (pb.selected.empty()) throw std::invalid_argument("gibbs: empty combination selection");
    pb.S_sel = h.rows(pb.selected);

    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < pb.active.size(); ++i)
        if (pb.active[i]) act.push_back(i);
    const std::size_t picks = std::min<std::size_t>(5, act.size());
    for (std::size_t p = 0; p < picks; ++p) pb.tracked_rho.push_back(act[p * act.size() / picks]);
    return pb;
}

}  // namespace

PosteriorSamples run_reconciliation(const GibbsConfig& config, const Hierarchy& hierarchy_in, const Panel& atomic_panel,
                                    const BaseForecasts& base_forecasts) {
    config.validate();
    Hierarchy hierarchy = hierarchy_in;
    if (!config.factor_levels.empty()) {
        hierarchy = hierarchy_in.with_factor_levels(config.factor_levels);
    } else if (hierarchy_in.factor_levels().empty()) {
        std::vector<std::string> names;
        for (std::size_t j = 0; j < hierarchy_in.level_count(); ++j)
            if (j != hierarchy_in.atomic_level()) names.push_back(hierarchy_in.levels()[j].name);
        if (names.empty()) throw std::invalid_argument("gibbs: the hierarchy has no aggregate level to carry factors");
        hierarchy = hierarchy_in.with_factor_levels(names);
    }

    const Problem pb = setup(config, hierarchy, atomic_panel, base_forecasts);

    std::vector<ChainResult> results(static_cast<std::size_t>(config.chains));
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (config.chains == 1 || workers == 1) {
        for (int c = 0; c < config.chains; ++c) results[static_cast<std::size_t>(c)] = run_chain(pb, static_cast<std::uint64_t>(c));
    } else {
        std::vector<std::exception_ptr> errors(results.size());
        std::vector<std::thread> pool;
        for (int c = 0; c < config.chains; ++c)
            pool.emplace_back([&, c] {
                try {
                    results[static_cast<std::size_t>(c)] = run_chain(pb, static_cast<std::uint64_t>(c));
                } catch (...) {
                    errors[static_cast<std::size_t>(c)] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    PosteriorSamples out;
    for (const auto& node : hierarchy.nodes()) out.node_ids.push_back(node.id);
    for (const auto& lv : pb.levels) {
        out.weight_levels.push_back(hierarchy.levels()[lv.index].name);
        out.calibrated_nodes.insert(out.calibrated_nodes.end(), lv.nodes.begin(), lv.nodes.end());
    }
    std::sort(out.calibrated_nodes.begin(), out.calibrated_nodes.end());
    out.combination_nodes = pb.selected;
    out.horizon = config.horizon;
    out.chains = config.chains;
    out.draws_per_chain = static_cast<int>(results.front().paths.size());

    const auto total = static_cast<Eigen::Index>(out.draws_per_chain) * config.chains;
    const auto m = static_cast<Eigen::Index>(hierarchy.node_count());
    const auto k = static_cast<Eigen::Index>(pb.levels.size());
    const Eigen::Index q = results.front().factor_variance.empty() ? 0 : results.front().factor_variance.front().size();
    out.rho.resize(total, m);
    out.rho0.resize(total);
    out.weights.resize(total, k);
    out.factor_variance.resize(total, q);
    out.loadings_mean = Eigen::MatrixXd::Zero(results.front().loadings_sum.rows(), results.front().loadings_sum.cols());
    out.factor_cov_mean = Eigen::MatrixXd::Zero(q, q);
    out.invariants.min_rho = 1.0;
    Eigen::Index row = 0;
    for (auto& res : results) {
        for (std::size_t d = 0; d < res.paths.size(); ++d, ++row) {
            out.rho.row(row) = res.rho[d].transpose();
            out.rho0(row) = res.rho0[d];
            if (k > 0) out.weights.row(row) = res.weights[d].transpose();
            out.factor_variance.row(row) = res.factor_variance[d].transpose();
        }
        out.paths.insert(out.paths.end(), std::make_move_iterator(res.paths.begin()),
                         std::make_move_iterator(res.paths.end()));
        out.loadings_mean += res.loadings_sum;
        out.factor_cov_mean += res.factor_cov_sum;
        out.trace.insert(out.trace.end(), res.trace.begin(), res.trace.end());
        InvariantSummary& a = out.invariants;
        const InvariantSummary& b = res.invariants;
        a.sweeps += b.sweeps;
        a.max_coherence_error = std::max(a.max_coherence_error, b.max_coherence_error);
        a.max_weight_sum_error = std::max(a.max_weight_sum_error, b.max_weight_sum_error);
        a.min_rho = std::min(a.min_rho, b.min_rho);
        a.max_rho = std::max(a.max_rho, b.max_rho);
        a.min_psd_margin = std::min(a.min_psd_margin, b.min_psd_margin);
        a.psd_checks += b.psd_checks;
    }
    if (total > 0) {
        out.loadings_mean /= static_cast<double>(total);
        out.factor_cov_mean /= static_cast<double>(total);
    }

    // Convergence diagnostics on a deterministic subset of parameters.
    if (out.draws_per_chain >= 4) {
        const auto per = static_cast<Eigen::Index>(out.draws_per_chain);
        auto chains_of = [&](auto&& value) {
            std::vector<std::vector<double>> cs(static_cast<std::size_t>(config.chains));
            for (int c = 0; c < config.chains; ++c)
                for (Eigen::Index d = 0; d < per; ++d) cs[static_cast<std::size_t>(c)].push_back(value(c * per + d));
            return cs;
        };
        auto record = [&](const std::string& name, auto&& value) {
            try {
                out.rhat[name] = rhat(chains_of(value));
            } catch (const std::domain_error&) {
                out.rhat[name] = std::numeric_limits<double>::infinity();
            }
        };
        if (!out.calibrated_nodes.empty()) record("rho0", [&](Eigen::Index d) { return out.rho0(d); });
        for (Eigen::Index j = 0; j < k; ++j)
            record("weight:" + out.weight_levels[static_cast<std::size_t>(j)], [&](Eigen::Index d) { return out.weights(d, j); });
        for (std::size_t node : pb.tracked_rho)
            record("rho:" + out.node_ids[node], [&](Eigen::Index d) { return out.rho(d, static_cast<Eigen::Index>(node)); });
        const std::size_t top = 0;
        const std::size_t first_atomic = hierarchy.node_count() - hierarchy.atomic_count();
        record("ybar:" + out.node_ids[top] + ":h1", [&](Eigen::Index d) { return out.paths[static_cast<std::size_t>(d)](0, 0); });
        if (first_atomic != top)
            record("ybar:" + out.node_ids[first_atomic] + ":h1", [&](Eigen::Index d) {
                return out.paths[static_cast<std::size_t>(d)](0, static_cast<Eigen::Index>(first_atomic));
            });
    }
    return out;
}

}  // namespace cohere
