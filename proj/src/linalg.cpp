#include "cohere/linalg.hpp"

#include <cmath>

#include "cohere/random.hpp"

namespace cohere {

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m, const std::string& what) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n) throw std::invalid_argument(what + ": matrix must be square");
    if (n == 0) return Eigen::MatrixXd(0, 0);
    if (!m.allFinite()) throw NumericalError(what + ": non-finite entries");
    if (m.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Zero(n, n);

    const Eigen::MatrixXd s = symmetrize(m);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    double base = s.trace() / static_cast<double>(n);
    if (!(base > 0.0)) base = s.cwiseAbs().maxCoeff();
    double jitter = 1e-9 * base;
    for (int attempt = 0; attempt < 6; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd j = s;
        j.diagonal().array() += jitter;
        llt.compute(j);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw NumericalError(what + ": not positive definite after jitter");
}

Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::MatrixXd L = cholesky_lower(cov);
    return mean + L * rng.normal_vector(mean.size());
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool psd_ordered(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    return min_eigenvalue(b - a) >= -tol * scale;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw std::invalid_argument("sample_covariance: need at least two rows");
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mean;
    return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd cholesky_solve(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b) {
    const auto L = lower.triangularView<Eigen::Lower>();
    Eigen::MatrixXd y = L.solve(b);
    return L.transpose().solve(y);
}

}  // namespace cohere
