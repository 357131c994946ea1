#include "cohere/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cohere/random.hpp"

namespace cohere {

Eigen::VectorXd ols_reconcile(const Eigen::VectorXd& base, const Eigen::MatrixXd& S) {
    if (base.size() != S.rows()) throw std::invalid_argument("ols_reconcile: forecast length does not match S");
    if (!base.allFinite()) throw std::invalid_argument("ols_reconcile: non-finite base forecast");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    qr.setThreshold(1e-10);
    if (qr.rank() < S.cols()) throw std::invalid_argument("ols_reconcile: S is rank deficient");
    return S * qr.solve(base);
}

Eigen::VectorXd ols_reconcile_partial(const Eigen::VectorXd& base, const Eigen::MatrixXd& S) {
    if (base.size() != S.rows()) throw std::invalid_argument("ols_reconcile: forecast length does not match S");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < base.size(); ++i)
        if (std::isfinite(base(i))) rows.push_back(i);
    Eigen::MatrixXd Sa(static_cast<Eigen::Index>(rows.size()), S.cols());
    Eigen::VectorXd ya(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Sa.row(static_cast<Eigen::Index>(r)) = S.row(rows[r]);
        ya(static_cast<Eigen::Index>(r)) = base(rows[r]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Sa);
    qr.setThreshold(1e-10);
    if (qr.rank() < S.cols()) throw std::invalid_argument("ols_reconcile: observed rows of S are rank deficient");
    return S * qr.solve(ya);
}

double oos_r2(const Eigen::VectorXd& forecast, const Eigen::VectorXd& actual, const Eigen::VectorXd& benchmark) {
    if (forecast.size() == 0) throw std::invalid_argument("oos_r2: no observations");
    if (forecast.size() != actual.size() || benchmark.size() != actual.size())
        throw std::invalid_argument("oos_r2: length mismatch");
    const double num = (actual - forecast).squaredNorm();
    const double den = (actual - benchmark).squaredNorm();
    if (!(den > 0.0)) throw std::invalid_argument("oos_r2: zero denominator");
    return 1.0 - num / den;
}

double energy_score(const Eigen::MatrixXd& samples, const Eigen::VectorXd& realization, Rng& rng, EnergyMode mode) {
    const Eigen::Index N = samples.rows();
    if (N == 0) throw std::invalid_argument("energy_score: empty sample set");
    if (samples.cols() != realization.size()) throw std::invalid_argument("energy_score: dimension mismatch");

    const bool exact = mode == EnergyMode::Exact ||
                       (mode == EnergyMode::Automatic && static_cast<std::size_t>(N) <= kExactEnergyLimit);
    if (exact) {
        double to_obs = 0.0;
        for (Eigen::Index i = 0; i < N; ++i) to_obs += (samples.row(i).transpose() - realization).norm();
        double pairs = 0.0;
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = i + 1; j < N; ++j) pairs += (samples.row(i) - samples.row(j)).norm();
        const double n = static_cast<double>(N);
        // Ordered pairs counted twice; the i == j terms are zero.
        return std::max(0.0, to_obs / n - pairs / (n * n));
    }
    double first = 0.0, second = 0.0;
    const auto n = static_cast<std::size_t>(N);
    for (std::size_t p = 0; p < kEnergyPairs; ++p) {
        const auto i = static_cast<Eigen::Index>(rng.index(n));
        const auto j = static_cast<Eigen::Index>(rng.index(n));
        first += 0.5 * ((samples.row(i).transpose() - realization).norm() + (samples.row(j).transpose() - realization).norm());
        second += (samples.row(i) - samples.row(j)).norm();
    }
    const double P = static_cast<double>(kEnergyPairs);
    return std::max(0.0, first / P - 0.5 * second / P);
}

}  // namespace cohere
