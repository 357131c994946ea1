#include "cohere/factor_model.hpp"

#include <cmath>
#include <stdexcept>

#include "cohere/hierarchy.hpp"
#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

namespace {

constexpr double kPriorShape = 1.0;
constexpr double kPriorRate = 1.0;

double column_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double ma = 0.0, mb = 0.0, c = 0.0;
    for (Eigen::Index t = 0; t < a.size(); ++t)
        if (std::isfinite(a(t)) && std::isfinite(b(t))) {
            ma += a(t);
            mb += b(t);
            c += 1.0;
        }
    if (c < 2.0) return 0.0;
    ma /= c;
    mb /= c;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (Eigen::Index t = 0; t < a.size(); ++t)
        if (std::isfinite(a(t)) && std::isfinite(b(t))) {
            sab += (a(t) - ma) * (b(t) - mb);
            saa += (a(t) - ma) * (a(t) - ma);
            sbb += (b(t) - mb) * (b(t) - mb);
        }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

ExposureMask exposure_mask(const Hierarchy& h) {
    if (h.factor_levels().empty()) throw std::invalid_argument("exposure_mask: hierarchy has no factor levels");
    const auto nodes = h.factor_nodes();
    ExposureMask mask = ExposureMask::Constant(static_cast<Eigen::Index>(h.atomic_count()),
                                               static_cast<Eigen::Index>(nodes.size()), false);
    for (std::size_t j = 0; j < nodes.size(); ++j)
        for (auto a : h.nodes()[nodes[j]].atomic) mask(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = true;
    return mask;
}

FactorModel FactorModel::initial(const Hierarchy& h, Eigen::Index periods) {
    FactorModel fm;
    fm.mask = exposure_mask(h);
    const Eigen::Index n = fm.mask.rows();
    const Eigen::Index q = fm.mask.cols();
    fm.loadings = Eigen::MatrixXd::Zero(n, q);
    fm.factor_cov = Eigen::MatrixXd::Identity(q, q);
    fm.idiosyncratic = Eigen::VectorXd::Ones(n);
    fm.factors = Eigen::MatrixXd::Zero(periods, q);
    fm.cs_precision = Eigen::VectorXd::Ones(periods);
    fm.ts_precision = Eigen::VectorXd::Ones(n);
    fm.blocks = h.factor_block_sizes();
    fm.loading_prior_sd = 1.0 / static_cast<double>(h.factor_levels().size());
    return fm;
}

SeriesCovariance FactorModel::series_covariance(const Eigen::VectorXd& scales) const {
    SeriesCovariance c;
    c.scales = scales;
    c.loadings = loadings;
    c.factor_cov = factor_cov;
    c.idiosyncratic = idiosyncratic;
    return c;
}

GaussianPosterior factor_posterior(const Eigen::VectorXd& r_t, const Eigen::MatrixXd& loadings, double precision) {
    const Eigen::Index q = loadings.cols();
    Eigen::MatrixXd DtD = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd Dtr = Eigen::VectorXd::Zero(q);
    for (Eigen::Index i = 0; i < r_t.size(); ++i) {
        if (!std::isfinite(r_t(i))) continue;
        DtD.noalias() += loadings.row(i).transpose() * loadings.row(i);
        Dtr.noalias() += loadings.row(i).transpose() * r_t(i);
    }
    Eigen::MatrixXd prec = precision * DtD;
    prec.diagonal().array() += 1.0;
    const Eigen::MatrixXd L = cholesky_lower(prec, "factor posterior precision");
    GaussianPosterior post;
    post.mean = cholesky_solve(L, precision * Dtr);
    post.cov = cholesky_solve(L, Eigen::MatrixXd::Identity(q, q));
    return post;
}

FactorDraw sample_factors(const Eigen::MatrixXd& r_std, const Eigen::MatrixXd& loadings,
                          const Eigen::VectorXd& cs_precision, Rng& rng) {
    const Eigen::Index T = r_std.rows();
    const Eigen::Index n = r_std.cols();
    const Eigen::Index q = loadings.cols();
    if (loadings.rows() != n) throw std::invalid_argument("sample_factors: loadings do not match residuals");
    if (cs_precision.size() != T) throw std::invalid_argument("sample_factors: precision vector has wrong length");

    FactorDraw out{Eigen::MatrixXd(T, q), Eigen::VectorXd(T)};
    const Eigen::MatrixXd full_DtD = loadings.transpose() * loadings;

    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd r = r_std.row(t).transpose();
        Eigen::Index active = 0;
        for (Eigen::Index i = 0; i < n; ++i) active += std::isfinite(r(i)) ? 1 : 0;
        if (active < q)
            throw std::invalid_argument("sample_factors: period " + std::to_string(t) + " has " +
                                        std::to_string(active) + " observed series for " + std::to_string(q) +
                                        " factors");
        const double h = cs_precision(t);

        Eigen::MatrixXd prec;
        Eigen::VectorXd rhs;
        if (active == n) {
            prec = h * full_DtD;
            rhs = h * (loadings.transpose() * r);
        } else {
            prec = Eigen::MatrixXd::Zero(q, q);
            rhs = Eigen::VectorXd::Zero(q);
            for (Eigen::Index i = 0; i < n; ++i)
                if (std::isfinite(r(i))) {
                    prec.noalias() += h * loadings.row(i).transpose() * loadings.row(i);
                    rhs.noalias() += h * loadings.row(i).transpose() * r(i);
                }
        }
        prec.diagonal().array() += 1.0;
        const Eigen::MatrixXd L = cholesky_lower(prec, "factor posterior precision");
        const Eigen::VectorXd mean = cholesky_solve(L, rhs);
        // f = mean + L^{-T} z has covariance prec^{-1}
        const Eigen::VectorXd f =
            mean + L.triangularView<Eigen::Lower>().transpose().solve(rng.normal_vector(q));
        out.factors.row(t) = f.transpose();

        double ssr = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::isfinite(r(i))) {
                const double e = r(i) - loadings.row(i).dot(f);
                ssr += e * e;
            }
        out.cs_precision(t) = rng.gamma(kPriorShape + 0.5 * static_cast<double>(active), kPriorRate + 0.5 * ssr);
    }
    return out;
}

Eigen::MatrixXd rotate_factors(const Eigen::MatrixXd& factors, const std::vector<std::size_t>& blocks) {
    const Eigen::Index q = factors.cols();
    std::size_t total = 0;
    for (auto b : blocks) total += b;
    if (static_cast<Eigen::Index>(total) != q) throw std::invalid_argument("rotate_factors: blocks do not sum to q");
    if (q == 0) return factors;

    const Eigen::MatrixXd S0 = sample_covariance(factors);
    Eigen::LLT<Eigen::MatrixXd> llt0(S0);
    // A factor (almost) spanned by the earlier ones leaves a vanishing pivot.
    if (llt0.info() != Eigen::Success ||
        (llt0.matrixL().toDenseMatrix().diagonal().array() <= 1e-6 * S0.diagonal().cwiseSqrt().array()).any())
        throw NumericalError("rotate_factors: empirical factor covariance is singular");
    const Eigen::MatrixXd S1 = block_covariance(factors, blocks);
    const Eigen::MatrixXd L0 = llt0.matrixL();
    const Eigen::MatrixXd L1 = cholesky_lower(S1, "block factor covariance");
    // M = L1 L0^{-1}; f_rot = f M'
    const Eigen::MatrixXd M =
        L0.triangularView<Eigen::Lower>().transpose().solve(L1.transpose()).transpose();
    return factors * M.transpose();
}

Eigen::MatrixXd enforce_sign(const Eigen::MatrixXd& factors, const Eigen::MatrixXd& level_residual_sums) {
    if (level_residual_sums.cols() != factors.cols() || level_residual_sums.rows() != factors.rows())
        throw std::invalid_argument("enforce_sign: one summed residual series per factor is required");
    Eigen::MatrixXd out = factors;
    for (Eigen::Index j = 0; j < factors.cols(); ++j)
        if (column_correlation(factors.col(j), level_residual_sums.col(j)) < 0.0) out.col(j) = -out.col(j);
    return out;
}

LoadingsDraw sample_loadings(const Eigen::MatrixXd& r_std, const Eigen::MatrixXd& factors, const ExposureMask& mask,
                             double prior_sd, const Eigen::VectorXd& ts_precision, Rng& rng) {
    const Eigen::Index T = r_std.rows();
    const Eigen::Index n = r_std.cols();
    const Eigen::Index q = factors.cols();
    if (factors.rows() != T || mask.rows() != n || mask.cols() != q || ts_precision.size() != n)
        throw std::invalid_argument("sample_loadings: dimension mismatch");
    if (!factors.allFinite()) throw std::invalid_argument("sample_loadings: non-finite factors");
    if (!(prior_sd > 0.0)) throw std::invalid_argument("sample_loadings: prior sd must be positive");

    LoadingsDraw out{Eigen::MatrixXd::Zero(n, q), Eigen::VectorXd(n)};
    const double prior_prec = 1.0 / (prior_sd * prior_sd);

    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < q; ++j)
            if (mask(i, j)) cols.push_back(j);
            else out.loadings(i, j) = kMaskedLoadingSd * rng.normal();
        // With a 1e-20 prior scale, masked coefficients decouple from the active
        // block to within ~1e-40; the active block is sampled on its own.
        const auto k = static_cast<Eigen::Index>(cols.size());

        std::vector<Eigen::Index> rows;
        for (Eigen::Index t = 0; t < T; ++t)
            if (std::isfinite(r_std(t, i))) rows.push_back(t);
        const auto Ti = static_cast<Eigen::Index>(rows.size());

        Eigen::MatrixXd X(Ti, k);
        Eigen::VectorXd y(Ti);
        for (Eigen::Index a = 0; a < Ti; ++a) {
            y(a) = r_std(rows[static_cast<std::size_t>(a)], i);
            for (Eigen::Index b = 0; b < k; ++b) X(a, b) = factors(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
        }
        const double h = ts_precision(i);
        if (k > 0) {
            Eigen::MatrixXd prec = h * X.transpose() * X;
            prec.diagonal().array() += prior_prec;
            const Eigen::MatrixXd L = cholesky_lower(prec, "loadings posterior precision");
            const Eigen::VectorXd mean = cholesky_solve(L, h * X.transpose() * y);
            const Eigen::VectorXd d = mean + L.triangularView<Eigen::Lower>().transpose().solve(rng.normal_vector(k));
            for (Eigen::Index b = 0; b < k; ++b) out.loadings(i, cols[static_cast<std::size_t>(b)]) = d(b);
        }
        double ssr = 0.0;
        for (Eigen::Index a = 0; a < Ti; ++a) {
            const double e = y(a) - out.loadings.row(i).dot(factors.row(rows[static_cast<std::size_t>(a)]));
            ssr += e * e;
        }
        out.ts_precision(i) = rng.gamma(kPriorShape + 0.5 * static_cast<double>(Ti), kPriorRate + 0.5 * ssr);
    }
    return out;
}

Eigen::MatrixXd block_covariance(const Eigen::MatrixXd& factors, const std::vector<std::size_t>& blocks) {
    const Eigen::MatrixXd S0 = sample_covariance(factors);
    Eigen::MatrixXd S1 = Eigen::MatrixXd::Zero(S0.rows(), S0.cols());
    Eigen::Index start = 0;
    for (auto b : blocks) {
        const auto len = static_cast<Eigen::Index>(b);
        S1.block(start, start, len, len) = S0.block(start, start, len, len);
        start += len;
    }
    return S1;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& factor_cov,
                           const Eigen::VectorXd& idiosyncratic, const Eigen::VectorXd& scales) {
    const Eigen::Index n = loadings.rows();
    if (factor_cov.rows() != loadings.cols() || factor_cov.cols() != loadings.cols() || idiosyncratic.size() != n ||
        scales.size() != n)
        throw std::invalid_argument("covariance: dimension mismatch");
    if ((idiosyncratic.array() <= 0.0).any()) throw std::invalid_argument("covariance: idiosyncratic variances must be positive");
    // D > 0, so the result is PSD whenever the factor covariance is.
    if (factor_cov.rows() > 0 && min_eigenvalue(factor_cov) < -1e-9 * std::max(1.0, factor_cov.cwiseAbs().maxCoeff()))
        throw NumericalError("covariance: factor covariance is not positive semi-definite");
    Eigen::MatrixXd core = loadings * factor_cov * loadings.transpose();
    core.diagonal() += idiosyncratic;
    Eigen::MatrixXd out = symmetrize(scales.asDiagonal() * core * scales.asDiagonal());
    return out;
}

}  // namespace cohere
