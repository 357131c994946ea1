#pragma once

#include <Eigen/Dense>

namespace cohere {

class Rng;

/// Covariances needed to update atomic residuals from one level's
/// standardized forecast deviations g*_j.
struct ForecastMoments {
    Eigen::MatrixXd cov_rg;    // n x m_j, Cov(r_n, g*_j)
    Eigen::MatrixXd var_g;     // m_j x m_j, Var(g*_j)
    Eigen::VectorXd level_sd;  // m_j, sd of the level's aggregated residuals
};

/// With C_j = S_j V S_j', Dg = diag(C_j) and Corr_j its correlation matrix:
///   Var(g*_j)     = diag(rho) Corr_j diag(rho) + diag(1 - rho^2)
///   Cov(r_n, g*_j) = V S_j' Dg^{-1/2} diag(rho)
ForecastMoments forecast_moments(const Eigen::MatrixXd& var_r, const Eigen::VectorXd& rho,
                                 const Eigen::MatrixXd& selector);

struct LevelPosterior {
    Eigen::VectorXd mean;  // n
    Eigen::MatrixXd cov;   // n x n
    Eigen::MatrixXd gain;  // n x m_j, Cov(r, g*) Var(g*)^{-1}
};

/// Linear Bayes adjustment of zero-mean residuals by g*:
///   mean = K g*, cov = Var(r) - K Cov(g*, r), K = Cov(r, g*) Var(g*)^{-1}.
LevelPosterior lbe_update(const Eigen::VectorXd& g_star, const ForecastMoments& moments, const Eigen::MatrixXd& var_r);

/// The gain K alone (shared by every g* vector of the level).
Eigen::MatrixXd lbe_gain(const ForecastMoments& moments);

/// Gaussian draw d ~ N(mean, cov); cov = 0 returns mean exactly.
Eigen::VectorXd sample_level_update(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng);

}  // namespace cohere
