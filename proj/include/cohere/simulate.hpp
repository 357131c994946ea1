#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cohere/forecasts.hpp"
#include "cohere/hierarchy.hpp"
#include "cohere/panel.hpp"

namespace cohere {

class Rng;

/// Ground truth for a synthetic data set. Residual covariance is
/// loadings * factor_cov * loadings' + diag(idiosyncratic), in raw units.
struct SimSpec {
    Hierarchy hierarchy;
    Eigen::Index periods = 120;
    int seasonal_period = 12;
    Month start{2000, 1};
    Eigen::MatrixXd loadings;        // n x q
    Eigen::MatrixXd factor_cov;      // q x q
    Eigen::VectorXd idiosyncratic;   // n, variances >= 0
    Eigen::VectorXd rho;             // m, per node
    Eigen::VectorXd initial_level;   // n
    Eigen::MatrixXd seasonal;        // s x n, zero-sum columns (empty when s = 0)
    Eigen::VectorXd level_noise_sd;  // n, random-walk innovation sd
    std::uint64_t seed = 1;

    void validate() const;
    Eigen::MatrixXd residual_covariance() const;
};

struct SimPanel {
    Panel atomic;
    Eigen::MatrixXd level;      // T x n true level path
    Eigen::MatrixXd signal;     // T x n, level plus seasonal
    Eigen::MatrixXd residuals;  // T x n
};

/// b_t = level_t + seasonal_t + r_t, with a random-walk level, a fixed
/// zero-sum seasonal cycle and factor-structured residuals.
SimPanel simulate_panel(const SimSpec& spec, Rng& rng);

/// g = rho^2 r + rho sqrt(1 - rho^2) sigma_r z, column by column.
Eigen::MatrixXd simulate_base_forecasts(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& rho,
                                        const Eigen::VectorXd& sigma_r, Rng& rng);

struct SimOptions {
    std::size_t atomic = 20;
    std::size_t groups = 2;  // < 2: total and atomic levels only
    Eigen::Index periods = 120;
    int seasonal_period = 12;
    std::vector<double> rho{0.6};  // one value, or one per level from the top
    double common_share = 0.5;     // share of residual variance carried by factors
    double level_noise = 0.005;    // random-walk sd per month, as a fraction of the level
    std::uint64_t seed = 1;
    Month start{2000, 1};
};

/// Total / optional group / atomic hierarchy with randomly drawn truth.
/// Every aggregate level is a factor level.
SimSpec make_sim_spec(const SimOptions& options);

struct SimulatedData {
    SimPanel panel;  // the first spec.periods months
    Panel holdout;   // the following `horizon` months of truth
    ForecastStore forecasts;
    Eigen::VectorXd node_residual_sd;  // m
};

/// Panel, a holdout of `horizon` further months, and base forecasts
/// ŷ = S signal + g for every origin from the month before the start to the
/// last panel month and every horizon 1..horizon. Each (origin, horizon) gets
/// independent noise.
SimulatedData simulate_dataset(const SimSpec& spec, int horizon);

}  // namespace cohere
