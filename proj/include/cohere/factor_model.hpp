#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cohere/covariance.hpp"

namespace cohere {

class Hierarchy;
class Rng;

using ExposureMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Prior scale for loadings on factors a series is not exposed to.
inline constexpr double kMaskedLoadingSd = 1e-20;

/// Hierarchical latent factor model for standardized atomic residuals.
struct FactorModel {
    Eigen::MatrixXd loadings;         // n x q
    Eigen::MatrixXd factor_cov;       // q x q, block diagonal by factor level
    Eigen::VectorXd idiosyncratic;    // n, standardized units
    ExposureMask mask;                // n x q
    Eigen::MatrixXd factors;          // T x q
    Eigen::VectorXd cs_precision;     // T, cross-sectional error precisions
    Eigen::VectorXd ts_precision;     // n, time-series error precisions
    std::vector<std::size_t> blocks;  // factor-level block sizes, summing to q
    double loading_prior_sd = 1.0;

    Eigen::Index factor_count() const { return loadings.cols(); }

    /// Δ = 0, Σ_f = I, D = 1, unit precisions; loading prior sd = 1 / (number of factor levels).
    static FactorModel initial(const Hierarchy& h, Eigen::Index periods);

    SeriesCovariance series_covariance(const Eigen::VectorXd& scales) const;
};

/// mask(i, j) is true iff atomic series i descends from factor node j.
ExposureMask exposure_mask(const Hierarchy& h);

struct GaussianPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Conditional posterior of f_t given loadings and error precision h:
/// precision I + h Δ'Δ, mean (I + h Δ'Δ)^{-1} h Δ' r_t. Missing entries of r_t are skipped.
GaussianPosterior factor_posterior(const Eigen::VectorXd& r_t, const Eigen::MatrixXd& loadings, double precision);

struct FactorDraw {
    Eigen::MatrixXd factors;       // T x q
    Eigen::VectorXd cs_precision;  // T
};

/// One Gibbs pass of the T cross-sectional regressions r*_t = Δ f_t + e_t with
/// f_t ~ N(0, I), e ~ N(0, 1/h_t), h_t ~ G(1, 1): f_t | h_t, then h_t | f_t.
FactorDraw sample_factors(const Eigen::MatrixXd& r_std, const Eigen::MatrixXd& loadings,
                          const Eigen::VectorXd& cs_precision, Rng& rng);

/// Zero the between-level blocks of the empirical factor covariance S0 to
/// get S1 and return f (chol(S1) chol(S0)^{-1})', whose empirical covariance is S1.
Eigen::MatrixXd rotate_factors(const Eigen::MatrixXd& factors, const std::vector<std::size_t>& blocks);

/// Flip each factor whose correlation with its node's summed residuals is
/// negative. Exactly zero correlation leaves the sign alone.
Eigen::MatrixXd enforce_sign(const Eigen::MatrixXd& factors, const Eigen::MatrixXd& level_residual_sums);

struct LoadingsDraw {
    Eigen::MatrixXd loadings;      // n x q
    Eigen::VectorXd ts_precision;  // n
};

/// n time-series regressions r*_i = f δ_i + e_i with δ_ij ~ N(0, s_ij^2),
/// s_ij = prior_sd where exposed and 1e-20 otherwise, e ~ N(0, 1/h_i), h_i ~ G(1, 1).
LoadingsDraw sample_loadings(const Eigen::MatrixXd& r_std, const Eigen::MatrixXd& factors, const ExposureMask& mask,
                             double prior_sd, const Eigen::VectorXd& ts_precision, Rng& rng);

/// Empirical covariance of the factors with between-level blocks zeroed.
Eigen::MatrixXd block_covariance(const Eigen::MatrixXd& factors, const std::vector<std::size_t>& blocks);

/// diag(scales) (Δ Σ_f Δ' + D) diag(scales).
Eigen::MatrixXd covariance(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& factor_cov,
                           const Eigen::VectorXd& idiosyncratic, const Eigen::VectorXd& scales);

}  // namespace cohere
