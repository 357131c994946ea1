#pragma once

#include <Eigen/Dense>

namespace cohere {

class Rng;

/// Cross-series covariance in factor form,
///   Var(r) = diag(scales) (loadings * factor_cov * loadings' + diag(idiosyncratic)) diag(scales),
/// used wherever draws with that covariance are needed without forming the
/// n x n matrix.
struct SeriesCovariance {
    Eigen::VectorXd scales;         // n
    Eigen::MatrixXd loadings;       // n x q, q may be zero
    Eigen::MatrixXd factor_cov;     // q x q
    Eigen::VectorXd idiosyncratic;  // n

    /// Independent series with the given variances.
    static SeriesCovariance diagonal(const Eigen::VectorXd& variances);

    Eigen::Index size() const { return scales.size(); }
    Eigen::MatrixXd dense() const;

    /// rows x n matrix whose rows are iid N(0, Var(r)).
    Eigen::MatrixXd draw_rows(Rng& rng, Eigen::Index rows) const;
};

}  // namespace cohere
