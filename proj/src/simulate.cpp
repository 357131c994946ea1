#include "cohere/simulate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

void SimSpec::validate() const {
    const auto n = static_cast<Eigen::Index>(hierarchy.atomic_count());
    const auto m = static_cast<Eigen::Index>(hierarchy.node_count());
    if (periods < 1) throw std::invalid_argument("simulate: periods must be >= 1");
    if (loadings.rows() != n || factor_cov.rows() != loadings.cols() || factor_cov.cols() != loadings.cols())
        throw std::invalid_argument("simulate: factor truth has wrong dimensions");
    if (idiosyncratic.size() != n || (idiosyncratic.array() < 0.0).any())
        throw std::invalid_argument("simulate: idiosyncratic variances must be n non-negative values");
    if (rho.size() != m || (rho.array() < 0.0).any() || (rho.array() > 1.0).any())
        throw std::invalid_argument("simulate: rho must hold one value in [0, 1] per node");
    if (initial_level.size() != n || level_noise_sd.size() != n) throw std::invalid_argument("simulate: level truth has wrong size");
    if (seasonal_period > 0 && (seasonal.rows() != seasonal_period || seasonal.cols() != n))
        throw std::invalid_argument("simulate: seasonal pattern must be s x n");
    if (factor_cov.rows() > 0 && min_eigenvalue(factor_cov) < -1e-12)
        throw std::invalid_argument("simulate: factor covariance is not positive semi-definite");
}

Eigen::MatrixXd SimSpec::residual_covariance() const {
    Eigen::MatrixXd v = loadings * factor_cov * loadings.transpose();
    v.diagonal() += idiosyncratic;
    return v;
}

SimPanel simulate_panel(const SimSpec& spec, Rng& rng) {
    spec.validate();
    const Eigen::Index T = spec.periods;
    const auto n = static_cast<Eigen::Index>(spec.hierarchy.atomic_count());
    const Eigen::Index q = spec.loadings.cols();
    SimPanel out;
    out.level.resize(T, n);
    out.signal.resize(T, n);
    out.residuals.resize(T, n);

    const Eigen::MatrixXd Lf = q > 0 ? cholesky_lower(spec.factor_cov, "factor covariance") : Eigen::MatrixXd();
    const Eigen::VectorXd idio_sd = spec.idiosyncratic.cwiseSqrt();
    Eigen::VectorXd level = spec.initial_level;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (t > 0)
            for (Eigen::Index j = 0; j < n; ++j) level(j) += spec.level_noise_sd(j) * rng.normal();
        out.level.row(t) = level.transpose();
        out.signal.row(t) = level.transpose();
        if (spec.seasonal_period > 0) out.signal.row(t) += spec.seasonal.row(t % spec.seasonal_period);
        Eigen::VectorXd r = idio_sd.cwiseProduct(rng.normal_vector(n));
        if (q > 0) r += spec.loadings * (Lf * rng.normal_vector(q));
        out.residuals.row(t) = r.transpose();
    }
    out.atomic.dates = month_range(spec.start, T);
    out.atomic.ids = spec.hierarchy.atomic_ids();
    out.atomic.values = out.signal + out.residuals;
    return out;
}

Eigen::MatrixXd simulate_base_forecasts(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& rho,
                                        const Eigen::VectorXd& sigma_r, Rng& rng) {
    if (rho.size() != residuals.cols() || sigma_r.size() != residuals.cols())
        throw std::invalid_argument("simulate_base_forecasts: one rho and sigma per column are required");
    if ((rho.array() < 0.0).any() || (rho.array() > 1.0).any())
        throw std::invalid_argument("simulate_base_forecasts: rho must lie in [0, 1]");
    Eigen::MatrixXd g(residuals.rows(), residuals.cols());
    for (Eigen::Index t = 0; t < residuals.rows(); ++t)
        for (Eigen::Index i = 0; i < residuals.cols(); ++i) {
            const double p = rho(i);
            g(t, i) = p * p * residuals(t, i) + p * std::sqrt(1.0 - p * p) * sigma_r(i) * rng.normal();
        }
    return g;
}

SimSpec make_sim_spec(const SimOptions& o) {
    if (o.atomic < 1) throw std::invalid_argument("simulate: need at least one atomic series");
    if (!(o.common_share >= 0.0 && o.common_share < 1.0)) throw std::invalid_argument("simulate: common share must be in [0, 1)");
    const bool grouped = o.groups >= 2;
    if (!(o.level_noise >= 0.0)) throw std::invalid_argument("simulate: level noise must be >= 0");
    if (grouped && o.groups > o.atomic) throw std::invalid_argument("simulate: more groups than atomic series");

    HierarchySpec hs;
    const int width = o.atomic < 10 ? 1 : static_cast<int>(std::floor(std::log10(static_cast<double>(o.atomic)))) + 1;
    for (std::size_t i = 0; i < o.atomic; ++i) {
        std::string num = std::to_string(i + 1);
        hs.atomic.push_back("S" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num);
    }
    HierarchySpec::Level total{"Total", {}};
    for (const auto& id : hs.atomic) total.labels[id] = "Total";
    hs.levels.push_back(total);
    hs.factor_levels.push_back("Total");
    if (grouped) {
        HierarchySpec::Level grp{"Group", {}};
        for (std::size_t i = 0; i < o.atomic; ++i) grp.labels[hs.atomic[i]] = "G" + std::to_string(i * o.groups / o.atomic + 1);
        hs.levels.push_back(grp);
        hs.factor_levels.push_back("Group");
    }
    SimSpec spec;
    spec.hierarchy = Hierarchy::build(hs);
    spec.periods = o.periods;
    spec.seasonal_period = o.seasonal_period;
    spec.start = o.start;
    spec.seed = o.seed;

    const Hierarchy& h = spec.hierarchy;
    const auto n = static_cast<Eigen::Index>(o.atomic);
    const auto m = static_cast<Eigen::Index>(h.node_count());
    const auto levels = h.level_count();
    if (o.rho.size() != 1 && o.rho.size() != levels)
        throw std::invalid_argument("simulate: give one rho or one per level (" + std::to_string(levels) + ")");
    spec.rho.resize(m);
    for (std::size_t j = 0; j < levels; ++j)
        for (std::size_t node : h.levels()[j].nodes) spec.rho(static_cast<Eigen::Index>(node)) = o.rho.size() == 1 ? o.rho[0] : o.rho[j];

    Rng rng = Rng::stream(o.seed, {0x5eedULL});
    auto uniform = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
    spec.initial_level.resize(n);
    spec.level_noise_sd.resize(n);
    Eigen::VectorXd sd(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        spec.initial_level(j) = 100.0 * uniform(0.5, 2.0);
        spec.level_noise_sd(j) = o.level_noise * spec.initial_level(j);
        sd(j) = 0.05 * spec.initial_level(j);
    }
    if (o.seasonal_period > 0) {
        spec.seasonal.resize(o.seasonal_period, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double amp = 0.15 * spec.initial_level(j);
            const double phase = uniform(0.0, 0.5);
            for (int k = 0; k < o.seasonal_period; ++k)
                spec.seasonal(k, j) = amp * std::sin(2.0 * std::numbers::pi * (k / static_cast<double>(o.seasonal_period) + phase));
            spec.seasonal.col(j).array() -= spec.seasonal.col(j).mean();
        }
    }

    const std::vector<std::size_t> factor_nodes = h.factor_nodes();
    const auto q = static_cast<Eigen::Index>(factor_nodes.size());
    const double per_level = o.common_share / static_cast<double>(h.factor_levels().size());
    spec.loadings = Eigen::MatrixXd::Zero(n, q);
    spec.factor_cov = Eigen::MatrixXd::Identity(q, q);
    spec.idiosyncratic.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double common = 0.0;
        for (Eigen::Index c = 0; c < q; ++c) {
            const auto& atoms = h.nodes()[factor_nodes[static_cast<std::size_t>(c)]].atomic;
            if (!std::binary_search(atoms.begin(), atoms.end(), static_cast<std::size_t>(j))) continue;
            const double load = std::sqrt(per_level) * uniform(0.8, 1.2);
            spec.loadings(j, c) = sd(j) * load;
            common += load * load;
        }
        spec.idiosyncratic(j) = sd(j) * sd(j) * std::max(1.0 - common, 0.05);
    }
    spec.validate();
    return spec;
}

SimulatedData simulate_dataset(const SimSpec& spec, int horizon) {
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    Rng panel_rng = Rng::stream(spec.seed, {1});
    Rng forecast_rng = Rng::stream(spec.seed, {2});
    SimSpec extended = spec;
    extended.periods = spec.periods + horizon;
    const SimPanel full = simulate_panel(extended, panel_rng);
    const Eigen::Index T = spec.periods;

    SimulatedData out;
    out.panel.atomic = full.atomic.slice(0, T);
    out.panel.level = full.level.topRows(T);
    out.panel.signal = full.signal.topRows(T);
    out.panel.residuals = full.residuals.topRows(T);
    out.holdout = full.atomic.slice(T, horizon);

    const Eigen::MatrixXd& S = spec.hierarchy.summing_matrix();
    const Eigen::MatrixXd node_cov = S * spec.residual_covariance() * S.transpose();
    out.node_residual_sd = node_cov.diagonal().cwiseSqrt();
    const Eigen::MatrixXd node_signal = full.signal * S.transpose();
    const Eigen::MatrixXd node_r = full.residuals * S.transpose();

    const auto m = node_signal.cols();
    out.forecasts = ForecastStore(static_cast<std::size_t>(m));
    for (Eigen::Index o = -1; o <= T - 1; ++o) {
        const Month origin = spec.start + static_cast<int>(o);
        for (int hz = 1; hz <= horizon; ++hz) {
            const Eigen::Index t = o + hz;
            const Eigen::MatrixXd g =
                simulate_base_forecasts(node_r.row(t), spec.rho, out.node_residual_sd, forecast_rng);
            for (Eigen::Index i = 0; i < m; ++i)
                out.forecasts.insert(origin, hz, static_cast<std::size_t>(i), node_signal(t, i) + g(0, i));
        }
    }
    return out;
}

}  // namespace cohere
