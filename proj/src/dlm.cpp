#include "cohere/dlm.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

DlmSpec build_dlm_spec(int seasonal_period, double discount) {
    if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("dlm: discount must lie in (0, 1]");
    if (seasonal_period < 0 || seasonal_period == 1)
        throw std::invalid_argument("dlm: seasonal period must be 0 or at least 2");

    DlmSpec spec;
    spec.seasonal_period = seasonal_period;
    spec.discount = discount;
    const Eigen::Index p = seasonal_period == 0 ? 1 : seasonal_period;
    spec.F = Eigen::VectorXd::Zero(p);
    spec.G = Eigen::MatrixXd::Zero(p, p);
    spec.F(0) = 1.0;
    spec.G(0, 0) = 1.0;
    if (seasonal_period > 0) {
        // state: (level, g_t, g_{t-1}, ..., g_{t-s+2}); g_{t+1} = -(g_t + ... + g_{t-s+2})
        spec.F(1) = 1.0;
        spec.G.block(1, 1, 1, p - 1).setConstant(-1.0);
        for (Eigen::Index i = 2; i < p; ++i) spec.G(i, i - 1) = 1.0;
    }
    return spec;
}

DlmPrior default_dlm_prior(const DlmSpec& spec, const Panel& atomic_panel) {
    const Eigen::Index n = atomic_panel.series();
    const Eigen::Index T = atomic_panel.periods();
    const Eigen::Index p = spec.p();
    const Eigen::Index s = std::max<Eigen::Index>(1, spec.seasonal_period);
    const Eigen::Index cycle = std::min(T, s);

    DlmPrior prior;
    prior.mean = Eigen::MatrixXd::Zero(p, n);
    prior.cov = 1e7 * Eigen::MatrixXd::Identity(p, p);
    prior.dof = 1.0;
    prior.scale = Eigen::VectorXd::Zero(n);

    for (Eigen::Index j = 0; j < n; ++j) {
        double sum = 0.0, count = 0.0;
        for (Eigen::Index t = 0; t < cycle; ++t)
            if (!atomic_panel.missing(t, j)) {
                sum += atomic_panel.values(t, j);
                count += 1.0;
            }
        const double level = count > 0.0 ? sum / count : 0.0;
        prior.mean(0, j) = level;
        if (spec.seasonal_period > 0 && cycle == s) {
            // m0 holds (g_0, g_{-1}, ..., g_{-s+2}); with period s, g_{-k} is the
            // deviation of observation s-1-k of the first cycle.
            for (Eigen::Index k = 0; k < s - 1; ++k) {
                const Eigen::Index t = s - 1 - k;
                prior.mean(1 + k, j) = atomic_panel.missing(t, j) ? 0.0 : atomic_panel.values(t, j) - level;
            }
        }

        double mean = 0.0, ss = 0.0, c = 0.0;
        for (Eigen::Index t = 0; t < T; ++t)
            if (!atomic_panel.missing(t, j)) {
                const double v = atomic_panel.values(t, j);
                c += 1.0;
                const double d = v - mean;
                mean += d / c;
                ss += d * (v - mean);
            }
        prior.scale(j) = c > 1.0 ? ss / (c - 1.0) : 1.0;
    }
    return prior;
}

FilterState forward_filter(const DlmSpec& spec, const Panel& atomic_panel, const std::optional<DlmPrior>& prior_in) {
    const Eigen::Index T = atomic_panel.periods();
    const Eigen::Index n = atomic_panel.series();
    const Eigen::Index p = spec.p();
    if (n == 0) throw std::invalid_argument("forward_filter: panel has no series");
    if (T < p)
        throw std::invalid_argument("forward_filter: need at least " + std::to_string(p) + " periods, got " +
                                    std::to_string(T));
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index t = 0; t < T; ++t) {
            const double v = atomic_panel.values(t, j);
            if (!is_missing(v) && !std::isfinite(v)) throw std::invalid_argument("forward_filter: non-finite data");
        }

    const DlmPrior prior = prior_in ? *prior_in : default_dlm_prior(spec, atomic_panel);
    if (prior.mean.rows() != p || prior.mean.cols() != n || prior.cov.rows() != p || prior.scale.size() != n)
        throw std::invalid_argument("forward_filter: prior dimensions do not match");

    FilterState fs;
    fs.spec = spec;
    fs.periods = T;
    fs.series = n;
    fs.a.reserve(static_cast<std::size_t>(T));
    fs.m.reserve(static_cast<std::size_t>(T));
    fs.forecast.resize(T, n);
    fs.error.resize(T, n);
    fs.group_of.resize(static_cast<std::size_t>(n));

    // Group series by missing-data pattern.
    std::map<std::vector<bool>, std::size_t> pattern_group;
    for (Eigen::Index j = 0; j < n; ++j) {
        std::vector<bool> pattern(static_cast<std::size_t>(T));
        for (Eigen::Index t = 0; t < T; ++t) pattern[static_cast<std::size_t>(t)] = atomic_panel.missing(t, j);
        auto [it, inserted] = pattern_group.emplace(pattern, fs.groups.size());
        if (inserted) {
            FilterState::Group g;
            g.C0 = prior.cov;
            fs.groups.push_back(std::move(g));
        }
        fs.groups[it->second].series.push_back(j);
        fs.group_of[static_cast<std::size_t>(j)] = it->second;
    }

    const Eigen::MatrixXd& G = spec.G;
    const Eigen::VectorXd& F = spec.F;
    const double delta = spec.discount;

    Eigen::VectorXd dof = Eigen::VectorXd::Constant(n, prior.dof);
    Eigen::VectorXd ssq = prior.dof * prior.scale;  // accumulated sum of squares
    Eigen::MatrixXd m_prev = prior.mean;

    for (Eigen::Index t = 0; t < T; ++t) {
        Eigen::MatrixXd a = G * m_prev;
        Eigen::MatrixXd m = a;
        fs.forecast.row(t) = F.transpose() * a;

        for (auto& g : fs.groups) {
            const Eigen::MatrixXd& C_prev = g.C.empty() ? g.C0 : g.C.back();
            Eigen::MatrixXd R = symmetrize(G * C_prev * G.transpose() / delta);
            const Eigen::VectorXd RF = R * F;
            const double q = F.dot(RF) + 1.0;
            const bool observed = !atomic_panel.missing(t, g.series.front());
            Eigen::MatrixXd C = R;
            if (observed) {
                const Eigen::VectorXd A = RF / q;
                C = symmetrize(R - A * A.transpose() * q);
                for (auto j : g.series) {
                    const double e = atomic_panel.values(t, j) - fs.forecast(t, j);
                    fs.error(t, j) = e;
                    m.col(j) = a.col(j) + A * e;
                    dof(j) += 1.0;
                    ssq(j) += e * e / q;
                }
            } else {
                for (auto j : g.series) fs.error(t, j) = kMissing;
            }
            g.R.push_back(std::move(R));
            g.C.push_back(std::move(C));
            g.q.push_back(q);
        }
        fs.a.push_back(std::move(a));
        fs.m.push_back(m);
        m_prev = std::move(m);
    }

    fs.dof = dof;
    fs.obs_scale = ssq.cwiseQuotient(dof);
    return fs;
}

StateDraw backward_sample(const FilterState& fs, const SeriesCovariance& obs_cov, Rng& rng) {
    const Eigen::Index T = fs.periods;
    const Eigen::Index n = fs.series;
    const Eigen::Index p = fs.spec.p();
    if (obs_cov.size() != n) throw std::invalid_argument("backward_sample: covariance size mismatch");
    if (T == 0) throw std::invalid_argument("backward_sample: empty filter");

    const Eigen::MatrixXd& G = fs.spec.G;
    StateDraw draw;
    draw.theta.resize(static_cast<std::size_t>(T));

    auto draw_period = [&](Eigen::Index t, const Eigen::MatrixXd& mean, auto&& cov_of_group) {
        const Eigen::MatrixXd Z = obs_cov.draw_rows(rng, p);  // p x n, columns correlated as Var(r)
        Eigen::MatrixXd theta = mean;
        for (const auto& g : fs.groups) {
            const Eigen::MatrixXd L = cholesky_lower(cov_of_group(g), "backward state covariance");
            for (auto j : g.series) theta.col(j) += L * Z.col(j);
        }
        draw.theta[static_cast<std::size_t>(t)] = std::move(theta);
    };

    draw_period(T - 1, fs.m[static_cast<std::size_t>(T - 1)],
                [&](const FilterState::Group& g) -> Eigen::MatrixXd { return g.C[static_cast<std::size_t>(T - 1)]; });

    for (Eigen::Index t = T - 2; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        Eigen::MatrixXd mean(p, n);
        std::vector<Eigen::MatrixXd> H(fs.groups.size());
        for (std::size_t gi = 0; gi < fs.groups.size(); ++gi) {
            const auto& g = fs.groups[gi];
            const Eigen::MatrixXd& C = g.C[ts];
            const Eigen::MatrixXd& Rn = g.R[ts + 1];
            // B = C G' R_{t+1}^{-1}
            const Eigen::MatrixXd Lr = cholesky_lower(Rn, "evolution covariance");
            const Eigen::MatrixXd B = cholesky_solve(Lr, G * C).transpose();
            // Without discounting the smoothed state is a deterministic function of the next one.
            H[gi] = fs.spec.discount >= 1.0 ? Eigen::MatrixXd::Zero(p, p) : symmetrize(C - B * Rn * B.transpose());
            const Eigen::MatrixXd& theta_next = draw.theta[ts + 1];
            for (auto j : g.series)
                mean.col(j) = fs.m[ts].col(j) + B * (theta_next.col(j) - fs.a[ts + 1].col(j));
        }
        std::size_t gi = 0;
        draw_period(t, mean, [&](const FilterState::Group&) -> Eigen::MatrixXd { return H[gi++]; });
    }
    return draw;
}

Eigen::MatrixXd forecast_prior(const FilterState& fs, const StateDraw& draw, int horizon,
                               const SeriesCovariance& obs_cov, Rng& rng) {
    if (horizon < 1) throw std::invalid_argument("forecast_prior: horizon must be at least 1");
    if (draw.periods() != fs.periods) throw std::invalid_argument("forecast_prior: draw does not match filter");
    const Eigen::Index n = fs.series;
    const Eigen::Index p = fs.spec.p();
    const Eigen::MatrixXd& G = fs.spec.G;
    const double delta = fs.spec.discount;

    std::vector<Eigen::MatrixXd> Lw;
    for (const auto& g : fs.groups) {
        const Eigen::MatrixXd W = symmetrize((1.0 - delta) / delta * G * g.C.back() * G.transpose());
        Lw.push_back(cholesky_lower(W, "evolution covariance"));
    }

    Eigen::MatrixXd out(horizon, n);
    Eigen::MatrixXd theta = draw.theta.back();
    for (int h = 0; h < horizon; ++h) {
        theta = G * theta;
        if (delta < 1.0) {
            const Eigen::MatrixXd Z = obs_cov.draw_rows(rng, p);
            for (std::size_t gi = 0; gi < fs.groups.size(); ++gi)
                for (auto j : fs.groups[gi].series) theta.col(j) += Lw[gi] * Z.col(j);
        }
        out.row(h) = fs.spec.F.transpose() * theta;
    }
    return out;
}

Eigen::VectorXd forecast_state_variance(const FilterState& fs, int horizon, Eigen::Index series) {
    const Eigen::MatrixXd& G = fs.spec.G;
    const Eigen::VectorXd& F = fs.spec.F;
    const double delta = fs.spec.discount;
    const Eigen::MatrixXd& C = fs.group_for(series).C.back();
    const Eigen::MatrixXd W = (1.0 - delta) / delta * G * C * G.transpose();
    Eigen::VectorXd out(horizon);
    Eigen::MatrixXd R = C;
    for (int h = 0; h < horizon; ++h) {
        R = G * R * G.transpose() + W;
        out(h) = F.dot(R * F);
    }
    return out;
}

Eigen::MatrixXd fitted_signal(const DlmSpec& spec, const StateDraw& draw) {
    const Eigen::Index T = draw.periods();
    const Eigen::Index n = T > 0 ? draw.theta.front().cols() : 0;
    Eigen::MatrixXd out(T, n);
    for (Eigen::Index t = 0; t < T; ++t) out.row(t) = spec.F.transpose() * draw.theta[static_cast<std::size_t>(t)];
    return out;
}

Panel residuals(const DlmSpec& spec, const Panel& atomic_panel, const StateDraw& draw) {
    if (draw.periods() != atomic_panel.periods() ||
        (draw.periods() > 0 && draw.theta.front().cols() != atomic_panel.series()) ||
        (draw.periods() > 0 && draw.theta.front().rows() != spec.p()))
        throw std::invalid_argument("residuals: state draw does not match the panel");
    Panel out = atomic_panel;
    out.values = atomic_panel.values - fitted_signal(spec, draw);
    return out;
}

}  // namespace cohere
