#include "cohere/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cohere/hierarchy.hpp"
#include "cohere/metrics.hpp"
#include "cohere/random.hpp"

namespace cohere {

std::string method_name(Method m) {
    switch (m) {
        case Method::Base: return "base";
        case Method::Ols: return "ols";
        case Method::He: return "he";
    }
    return "";
}

Method parse_method(const std::string& name) {
    if (name == "base") return Method::Base;
    if (name == "ols") return Method::Ols;
    if (name == "he") return Method::He;
    throw std::invalid_argument("unknown method '" + name + "' (expected base, ols or he)");
}

std::optional<double> MetricReport::find(const std::string& method, const std::string& level, const std::string& horizon,
                                         const std::string& metric, const std::string& split) const {
    for (const auto& r : rows)
        if (r.method == method && r.level == level && r.horizon == horizon && r.metric == metric && r.purpose_split == split)
            return r.value;
    return std::nullopt;
}

namespace {

struct Group {
    std::string level;
    std::string split;
    std::vector<std::size_t> nodes;
};

struct R2Acc {
    double num = 0.0;
    double den = 0.0;
    long count = 0;
};

struct EsAcc {
    double sum = 0.0;
    long count = 0;
};

// Node groups to score: each level, the whole hierarchy, and the split
// groups of every level nested inside the split level.
std::vector<Group> scoring_groups(const Hierarchy& h, const std::string& split_level) {
    std::vector<Group> groups;
    for (const auto& lv : h.levels()) groups.push_back({lv.name, "all", lv.nodes});
    std::vector<std::size_t> every(h.node_count());
    for (std::size_t i = 0; i < every.size(); ++i) every[i] = i;
    groups.push_back({"all", "all", every});
    if (split_level.empty()) return groups;

    const auto split = h.level_index(split_level);
    if (!split) throw std::invalid_argument("evaluate: unknown split level '" + split_level + "'");
    const auto& split_nodes = h.levels()[*split].nodes;
    for (std::size_t j = 0; j < h.level_count(); ++j) {
        if (j == *split) continue;
        std::map<std::size_t, std::vector<std::size_t>> by_parent;
        bool nested = true;
        for (std::size_t node : h.levels()[j].nodes) {
            const auto& atoms = h.nodes()[node].atomic;
            std::optional<std::size_t> parent;
            for (std::size_t p : split_nodes) {
                const auto& pa = h.nodes()[p].atomic;
                if (std::includes(pa.begin(), pa.end(), atoms.begin(), atoms.end())) parent = p;
            }
            if (!parent) {
                nested = false;
                break;
            }
            by_parent[*parent].push_back(node);
        }
        // Levels that are themselves coarser than the split carry no split rows.
        if (!nested || by_parent.size() < 2 || j == h.atomic_level()) continue;
        for (auto& [p, nodes] : by_parent) groups.push_back({h.levels()[j].name, h.nodes()[p].id, nodes});
    }
    return groups;
}

std::vector<std::pair<std::string, std::vector<int>>> horizon_keys(int H) {
    std::vector<std::pair<std::string, std::vector<int>>> keys;
    for (int h = 1; h <= H; ++h) keys.push_back({std::to_string(h), {h}});
    if (H >= 6) {
        std::vector<int> b(6);
        for (int h = 1; h <= 6; ++h) b[static_cast<std::size_t>(h - 1)] = h;
        keys.push_back({"1-6", b});
    }
    if (H > 1 && H != 6) {
        std::vector<int> b(static_cast<std::size_t>(H));
        for (int h = 1; h <= H; ++h) b[static_cast<std::size_t>(h - 1)] = h;
        keys.push_back({"1-" + std::to_string(H), b});
    }
    return keys;
}

}  // namespace

MetricReport rolling_evaluate(const EvaluationConfig& config, const Hierarchy& h, const Panel& panel,
                              const ForecastStore& store) {
    if (config.methods.empty()) throw std::invalid_argument("evaluate: no methods");
    if (config.window < 2) throw std::invalid_argument("evaluate: window must be >= 2");
    if (config.horizon < 1) throw std::invalid_argument("evaluate: horizon must be >= 1");
    const Eigen::Index T = panel.periods();
    if (T < config.window + config.horizon) throw std::invalid_argument("evaluate: insufficient data for the window and horizon");
    if (panel.ids != h.atomic_ids()) throw std::invalid_argument("evaluate: panel columns must match the hierarchy's atomic series");

    const Panel nodes = aggregate(h, panel);
    const Eigen::MatrixXd& S = h.summing_matrix();
    const auto m = static_cast<Eigen::Index>(h.node_count());
    const int H = config.horizon;
    const auto groups = scoring_groups(h, config.split_level);

    std::vector<Eigen::Index> origins;
    for (Eigen::Index o = config.window - 1; o <= T - 2; ++o) origins.push_back(o);
    if (config.max_origins > 0 && origins.size() > static_cast<std::size_t>(config.max_origins))
        origins.resize(static_cast<std::size_t>(config.max_origins));

    // Accumulators keyed by (method, group, horizon).
    const std::size_t M = config.methods.size(), G = groups.size();
    auto idx = [&](std::size_t mi, std::size_t gi, int hz) { return (mi * G + gi) * static_cast<std::size_t>(H) + static_cast<std::size_t>(hz - 1); };
    std::vector<R2Acc> r2(M * G * static_cast<std::size_t>(H));
    std::vector<EsAcc> es(M * G * static_cast<std::size_t>(H));

    MetricReport report;
    for (std::size_t oi = 0; oi < origins.size(); ++oi) {
        const Eigen::Index o = origins[oi];
        const Month origin = panel.dates[static_cast<std::size_t>(o)];
        report.origins.push_back(origin);
        const int h_eff = static_cast<int>(std::min<Eigen::Index>(H, T - 1 - o));
        const Panel window = panel.slice(o - config.window + 1, config.window);
        const Panel window_nodes = nodes.slice(o - config.window + 1, config.window);

        // Per-calendar-month in-window means.
        Eigen::MatrixXd month_mean = Eigen::MatrixXd::Constant(12, m, kMissing);
        for (Eigen::Index i = 0; i < m; ++i)
            for (int cm = 1; cm <= 12; ++cm) {
                double sum = 0.0;
                int c = 0;
                for (Eigen::Index t = 0; t < window_nodes.periods(); ++t)
                    if (window_nodes.dates[static_cast<std::size_t>(t)].month == cm && !std::isnan(window_nodes.values(t, i))) {
                        sum += window_nodes.values(t, i);
                        ++c;
                    }
                if (c > 0) month_mean(cm - 1, i) = sum / c;
            }

        Eigen::MatrixXd base(h_eff, m);
        for (int hz = 1; hz <= h_eff; ++hz)
            for (Eigen::Index i = 0; i < m; ++i) {
                auto v = store.get(origin, hz, static_cast<std::size_t>(i));
                base(hz - 1, i) = v ? *v : kMissing;
            }

        for (std::size_t mi = 0; mi < M; ++mi) {
            const Method method = config.methods[mi];
            // Draws per horizon: rows are draws, columns nodes.
            std::vector<Eigen::MatrixXd> draws(static_cast<std::size_t>(h_eff));
            if (method == Method::Base) {
                for (int hz = 0; hz < h_eff; ++hz) draws[static_cast<std::size_t>(hz)] = base.row(hz);
            } else if (method == Method::Ols) {
                for (int hz = 0; hz < h_eff; ++hz)
                    draws[static_cast<std::size_t>(hz)] = ols_reconcile_partial(base.row(hz).transpose(), S).transpose();
            } else {
                GibbsConfig gc = config.gibbs;
                gc.horizon = h_eff;
                const BaseForecasts bf = extract_base_forecasts(store, window.dates, h_eff);
                const auto start = std::chrono::steady_clock::now();
                const PosteriorSamples ps = run_reconciliation(gc, h, window, bf);
                report.reconcile_seconds.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
                for (int hz = 0; hz < h_eff; ++hz) {
                    Eigen::MatrixXd d(static_cast<Eigen::Index>(ps.paths.size()), m);
                    for (std::size_t k = 0; k < ps.paths.size(); ++k) d.row(static_cast<Eigen::Index>(k)) = ps.paths[k].row(hz);
                    draws[static_cast<std::size_t>(hz)] = std::move(d);
                }
            }

            double origin_energy = 0.0;
            int origin_count = 0;
            for (int hz = 1; hz <= h_eff; ++hz) {
                const Eigen::Index target = o + hz;
                const int cm = panel.dates[static_cast<std::size_t>(target)].month;
                const Eigen::MatrixXd& dr = draws[static_cast<std::size_t>(hz - 1)];
                const Eigen::VectorXd point = dr.colwise().mean().transpose();
                for (std::size_t gi = 0; gi < G; ++gi) {
                    const auto& g = groups[gi];
                    R2Acc& ra = r2[idx(mi, gi, hz)];
                    bool complete = true;
                    Eigen::MatrixXd sub(dr.rows(), static_cast<Eigen::Index>(g.nodes.size()));
                    Eigen::VectorXd actual(static_cast<Eigen::Index>(g.nodes.size()));
                    for (std::size_t c = 0; c < g.nodes.size(); ++c) {
                        const auto node = static_cast<Eigen::Index>(g.nodes[c]);
                        const double x = nodes.values(target, node);
                        const double xhat = point(node);
                        const double xbar = month_mean(cm - 1, node);
                        sub.col(static_cast<Eigen::Index>(c)) = dr.col(node);
                        actual(static_cast<Eigen::Index>(c)) = x;
                        if (std::isnan(x) || std::isnan(xhat)) {
                            complete = false;
                            continue;
                        }
                        if (std::isnan(xbar)) continue;
                        ra.num += (x - xhat) * (x - xhat);
                        ra.den += (x - xbar) * (x - xbar);
                        ++ra.count;
                    }
                    if (!complete || g.split != "all") continue;
                    Rng rng = Rng::stream(config.gibbs.seed, {static_cast<std::uint64_t>(oi), static_cast<std::uint64_t>(hz),
                                                              static_cast<std::uint64_t>(gi), static_cast<std::uint64_t>(mi)});
                    const double score = energy_score(sub, actual, rng);
                    es[idx(mi, gi, hz)].sum += score;
                    ++es[idx(mi, gi, hz)].count;
                    if (g.level == "all") {
                        origin_energy += score;
                        ++origin_count;
                    }
                }
            }
            if (origin_count > 0) report.origin_scores.push_back({method_name(method), origin, origin_energy / origin_count});
        }
    }

    for (std::size_t mi = 0; mi < M; ++mi) {
        const std::string mname = method_name(config.methods[mi]);
        for (std::size_t gi = 0; gi < G; ++gi) {
            for (const auto& [key, hs] : horizon_keys(H)) {
                R2Acc ra;
                EsAcc ea;
                for (int hz : hs) {
                    const R2Acc& a = r2[idx(mi, gi, hz)];
                    ra.num += a.num;
                    ra.den += a.den;
                    ra.count += a.count;
                    ea.sum += es[idx(mi, gi, hz)].sum;
                    ea.count += es[idx(mi, gi, hz)].count;
                }
                if (ra.count > 0 && ra.den > 0.0)
                    report.rows.push_back({mname, groups[gi].level, groups[gi].split, key, "r2_pct", 100.0 * (1.0 - ra.num / ra.den)});
                if (ea.count > 0) report.rows.push_back({mname, groups[gi].level, groups[gi].split, key, "energy", ea.sum / ea.count});
            }
        }
    }
    return report;
}

}  // namespace cohere
