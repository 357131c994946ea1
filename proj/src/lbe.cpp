#include "cohere/lbe.hpp"

#include <cmath>
#include <stdexcept>

#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

ForecastMoments forecast_moments(const Eigen::MatrixXd& var_r, const Eigen::VectorXd& rho,
                                 const Eigen::MatrixXd& selector) {
    const Eigen::Index n = var_r.rows();
    const Eigen::Index mj = selector.rows();
    if (var_r.cols() != n || selector.cols() != n || rho.size() != mj)
        throw std::invalid_argument("forecast_moments: dimension mismatch");
    if ((rho.array() < 0.0).any() || (rho.array() > 1.0).any())
        throw std::invalid_argument("forecast_moments: calibration coefficients must lie in [0, 1]");

    const Eigen::MatrixXd VSt = var_r * selector.transpose();  // n x m_j
    const Eigen::MatrixXd Cj = selector * VSt;
    ForecastMoments out;
    out.level_sd = Cj.diagonal().cwiseSqrt();
    if (!(Cj.diagonal().array() > 0.0).all()) throw std::invalid_argument("forecast_moments: zero level variance");
    const Eigen::VectorXd inv_sd = out.level_sd.cwiseInverse();

    Eigen::MatrixXd corr = inv_sd.asDiagonal() * Cj * inv_sd.asDiagonal();
    corr.diagonal().setOnes();
    out.var_g = rho.asDiagonal() * corr * rho.asDiagonal();
    out.var_g.diagonal().array() += 1.0 - rho.array().square();
    out.var_g = symmetrize(out.var_g);
    out.cov_rg = VSt * inv_sd.cwiseProduct(rho).asDiagonal();
    return out;
}

Eigen::MatrixXd lbe_gain(const ForecastMoments& moments) {
    const Eigen::MatrixXd L = cholesky_lower(moments.var_g, "forecast covariance");
    if (L.rows() > 0 && (L.diagonal().array() == 0.0).any())
        throw NumericalError("lbe: forecast covariance is singular");
    return cholesky_solve(L, moments.cov_rg.transpose()).transpose();
}

LevelPosterior lbe_update(const Eigen::VectorXd& g_star, const ForecastMoments& moments, const Eigen::MatrixXd& var_r) {
    if (g_star.size() != moments.var_g.rows()) throw std::invalid_argument("lbe_update: forecast vector has wrong length");
    LevelPosterior post;
    post.gain = lbe_gain(moments);
    post.mean = post.gain * g_star;
    post.cov = symmetrize(var_r - post.gain * moments.cov_rg.transpose());
    return post;
}

Eigen::VectorXd sample_level_update(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("sample_level_update: dimension mismatch");
    if (cov.size() == 0 || cov.cwiseAbs().maxCoeff() == 0.0) return mean;
    return sample_mvn(rng, mean, cov);
}

}  // namespace cohere
