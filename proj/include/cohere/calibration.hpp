#pragma once

#include <vector>

#include <Eigen/Dense>

namespace cohere {

class Rng;

struct Standardized {
    Eigen::MatrixXd values;  // column-centred, unit sample sd; NaN cells preserved
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
};

/// Remove column means and scale columns to unit sample standard deviation.
/// Missing (NaN) cells are ignored and kept. Throws std::invalid_argument when
/// a column has fewer than two distinct observed values.
Standardized standardize(const Eigen::MatrixXd& panel);

/// Per-series calibration coefficients shrunk towards a system-wide value.
struct CalibrationState {
    Eigen::VectorXd rho;        // m, each in [0, 1]
    double rho0 = 0.0;
    Eigen::VectorXd precision;  // m, regression error precisions
    double rho_sd = 0.1;
    double rho0_sd = 0.5;

    static CalibrationState initial(Eigen::Index series, double rho = 0.1);
};

/// One Gibbs pass for r*_i ~ N(rho_i g*_i, 1/h_i), rho_i ~ N(rho0, rho_sd^2)
/// truncated to [0, 1], rho0 ~ N(0, rho0_sd^2), h_i ~ G(1, 1).
///
/// Columns flagged inactive (no base forecasts) carry no data: their rho_i is
/// drawn from the truncated prior given the new rho0 and they do not inform
/// rho0. By default a column is active when it has an observed (r*, g*) pair or
/// when the panels have no rows at all.
CalibrationState sample_calibration(const Eigen::MatrixXd& r_std, const Eigen::MatrixXd& g_std,
                                    const CalibrationState& state, Rng& rng,
                                    const std::vector<bool>& active = {});

}  // namespace cohere
