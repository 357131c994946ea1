#include "cohere/covariance.hpp"

#include <stdexcept>

#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

SeriesCovariance SeriesCovariance::diagonal(const Eigen::VectorXd& variances) {
    if ((variances.array() < 0.0).any()) throw std::invalid_argument("SeriesCovariance: negative variance");
    SeriesCovariance c;
    c.scales = variances.cwiseSqrt();
    c.loadings = Eigen::MatrixXd::Zero(variances.size(), 0);
    c.factor_cov = Eigen::MatrixXd::Zero(0, 0);
    c.idiosyncratic = Eigen::VectorXd::Ones(variances.size());
    return c;
}

Eigen::MatrixXd SeriesCovariance::dense() const {
    Eigen::MatrixXd core = loadings * factor_cov * loadings.transpose();
    core.diagonal() += idiosyncratic;
    return scales.asDiagonal() * core * scales.asDiagonal();
}

Eigen::MatrixXd SeriesCovariance::draw_rows(Rng& rng, Eigen::Index rows) const {
    const Eigen::Index n = size();
    Eigen::MatrixXd out = rng.normal_matrix(rows, n) * idiosyncratic.cwiseSqrt().asDiagonal();
    if (loadings.cols() > 0) {
        const Eigen::MatrixXd Lf = cholesky_lower(factor_cov, "factor covariance");
        out += rng.normal_matrix(rows, loadings.cols()) * Lf.transpose() * loadings.transpose();
    }
    return out * scales.asDiagonal();
}

}  // namespace cohere
