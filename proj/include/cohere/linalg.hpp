#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cohere {

class Rng;

/// Raised when a covariance matrix fails positive (semi-)definiteness checks
/// even after jitter, or a linear system is singular.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lower Cholesky factor. On failure, retries with a trace-scaled diagonal
/// jitter of 1e-9 * trace / n, growing tenfold per retry (six retries).
/// A matrix of all zeros returns a zero factor.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m, const std::string& what = "covariance");

/// Draw mean + L z, z ~ N(0, I), where L L' = cov.
Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

/// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Eigen::MatrixXd& m);

/// True when b - a is positive semi-definite within tol * max(1, |b|_max).
bool psd_ordered(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol = 1e-9);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// Sample covariance of the columns of x (rows are observations), divisor n - 1.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x);

/// Solve (L L') x = b given the lower factor L.
Eigen::MatrixXd cholesky_solve(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& b);

}  // namespace cohere
