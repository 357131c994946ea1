#include "cohere/calibration.hpp"

#include <cmath>
#include <stdexcept>

#include "cohere/random.hpp"

namespace cohere {

namespace {
constexpr double kPrecisionShape = 1.0;
constexpr double kPrecisionRate = 1.0;
}  // namespace

Standardized standardize(const Eigen::MatrixXd& panel) {
    const Eigen::Index T = panel.rows();
    const Eigen::Index k = panel.cols();
    Standardized out{panel, Eigen::VectorXd(k), Eigen::VectorXd(k)};
    for (Eigen::Index j = 0; j < k; ++j) {
        double mean = 0.0, ss = 0.0, c = 0.0;
        double first = std::nan("");
        bool distinct = false;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double v = panel(t, j);
            if (std::isnan(v)) continue;
            if (!std::isfinite(v)) throw std::invalid_argument("standardize: non-finite value");
            if (std::isnan(first)) first = v;
            else if (v != first) distinct = true;
            c += 1.0;
            const double d = v - mean;
            mean += d / c;
            ss += d * (v - mean);
        }
        if (!distinct || c < 2.0) throw std::invalid_argument("standardize: column " + std::to_string(j) + " has zero variance");
        const double sd = std::sqrt(ss / (c - 1.0));
        out.means(j) = mean;
        out.scales(j) = sd;
        for (Eigen::Index t = 0; t < T; ++t)
            if (!std::isnan(panel(t, j))) out.values(t, j) = (panel(t, j) - mean) / sd;
    }
    return out;
}

CalibrationState CalibrationState::initial(Eigen::Index series, double rho) {
    CalibrationState s;
    s.rho = Eigen::VectorXd::Constant(series, rho);
    s.rho0 = rho;
    s.precision = Eigen::VectorXd::Ones(series);
    return s;
}

CalibrationState sample_calibration(const Eigen::MatrixXd& r_std, const Eigen::MatrixXd& g_std,
                                    const CalibrationState& state, Rng& rng, const std::vector<bool>& active_in) {
    const Eigen::Index T = r_std.rows();
    const Eigen::Index m = r_std.cols();
    if (g_std.rows() != T || g_std.cols() != m || state.rho.size() != m || state.precision.size() != m)
        throw std::invalid_argument("sample_calibration: dimension mismatch");
    if (!active_in.empty() && static_cast<Eigen::Index>(active_in.size()) != m)
        throw std::invalid_argument("sample_calibration: activity flags have wrong length");

    CalibrationState next = state;
    const double prior_prec = 1.0 / (state.rho_sd * state.rho_sd);

    std::vector<bool> active(static_cast<std::size_t>(m), T == 0);
    double active_sum = 0.0;
    double active_count = 0.0;

    for (Eigen::Index i = 0; i < m; ++i) {
        double sgg = 0.0, sgr = 0.0, srr = 0.0, n = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double r = r_std(t, i), g = g_std(t, i);
            if (std::isnan(r) || std::isnan(g)) continue;
            if (!std::isfinite(r) || !std::isfinite(g)) throw std::invalid_argument("sample_calibration: non-finite input");
            sgg += g * g;
            sgr += g * r;
            srr += r * r;
            n += 1.0;
        }
        const auto iu = static_cast<std::size_t>(i);
        active[iu] = active_in.empty() ? (active[iu] || n > 0.0) : static_cast<bool>(active_in[iu]);
        if (!active[iu]) continue;

        const double h = state.precision(i);
        const double post_prec = prior_prec + h * sgg;
        const double post_mean = (prior_prec * state.rho0 + h * sgr) / post_prec;
        const double rho = truncated_normal(rng, post_mean, 1.0 / std::sqrt(post_prec), 0.0, 1.0);
        const double ssr = srr - 2.0 * rho * sgr + rho * rho * sgg;
        next.rho(i) = rho;
        next.precision(i) = rng.gamma(kPrecisionShape + 0.5 * n, kPrecisionRate + 0.5 * std::max(ssr, 0.0));
        active_sum += rho;
        active_count += 1.0;
    }

    // rho0 | rho: normal-normal update over the active series.
    const double prec0 = 1.0 / (state.rho0_sd * state.rho0_sd) + active_count * prior_prec;
    const double mean0 = (prior_prec * active_sum) / prec0;
    next.rho0 = rng.normal(mean0, 1.0 / std::sqrt(prec0));

    for (Eigen::Index i = 0; i < m; ++i) {
        if (active[static_cast<std::size_t>(i)]) continue;
        next.rho(i) = truncated_normal(rng, next.rho0, state.rho_sd, 0.0, 1.0);
        next.precision(i) = rng.gamma(kPrecisionShape, kPrecisionRate);
    }
    return next;
}

}  // namespace cohere
