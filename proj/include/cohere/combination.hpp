#pragma once

#include <vector>

#include <Eigen/Dense>

namespace cohere {

class Hierarchy;
class Rng;

/// Noise sd of the pseudo-observation 1'ω = 1.
inline constexpr double kSumToOneSd = 1e-8;

/// SUR regression r_t = c_t ω + e_t, e_t ~ N(0, H^{-1}), with one weight
/// vector ω shared by all q equations.
struct CombinationState {
    Eigen::VectorXd weights;      // k
    Eigen::MatrixXd precision;    // q x q
    Eigen::VectorXd prior_mean;   // k, 1/k each
    double prior_sd = 1.0;        // 2/k
    double sum_sd = kSumToOneSd;
    double prior_dof = 0.0;       // q + 2
    Eigen::MatrixXd prior_scale;  // q x q, E[H] = prior_dof * prior_scale a priori
    std::vector<std::size_t> selected;

    Eigen::Index levels() const { return weights.size(); }
    Eigen::Index equations() const { return precision.rows(); }

    /// Equal weights, H = selected_cov^{-1}, Wishart prior centred on the same.
    static CombinationState initial(Eigen::Index levels, const std::vector<std::size_t>& selected,
                                    const Eigen::MatrixXd& selected_cov);

    /// Re-centre the Wishart prior on the inverse of `selected_cov`.
    void set_prior_covariance(const Eigen::MatrixXd& selected_cov);
};

struct CombinationDesign {
    Eigen::MatrixXd targets;              // T x q
    std::vector<Eigen::MatrixXd> design;  // k matrices, T x q; design[j](t, i) = c_t(i, j)
};

/// Targets are the selected series' prior residuals (S_sel r_t); level j's
/// design column is S_sel applied to its in-sample fitted update.
/// `level_updates` holds one T x n matrix per level and `residuals` is T x n.
CombinationDesign assemble_design(const std::vector<Eigen::MatrixXd>& level_updates, const Hierarchy& h,
                                  const std::vector<std::size_t>& selected, const Eigen::MatrixXd& residuals);

/// Drop selected nodes whose S rows are linear combinations of earlier ones,
/// keeping the first occurrence. A singular error covariance would otherwise result.
std::vector<std::size_t> independent_nodes(const Hierarchy& h, const std::vector<std::size_t>& selected);

/// ω | H: Gaussian conditional of the SUR with a dummy observation
/// 1 = 1'ω + v, v ~ N(0, sum_sd^2). Rows with any missing value are skipped.
/// The dummy observation is applied as a rank-one conditioning step on a draw
/// from the unconstrained conditional, which stays well conditioned.
Eigen::VectorXd sample_weights(const CombinationDesign& design, const CombinationState& state, Rng& rng);

/// Posterior mean and covariance of ω | H (exposed for testing).
void weight_posterior(const CombinationDesign& design, const CombinationState& state,
                      Eigen::VectorXd& mean, Eigen::MatrixXd& cov);

/// H | residuals ~ Wishart(prior_dof + T, (prior_scale^{-1} + E'E)^{-1}).
Eigen::MatrixXd sample_H(const Eigen::MatrixXd& sur_residuals, double prior_dof, const Eigen::MatrixXd& prior_scale,
                         Rng& rng);

/// T x q residuals targets - sum_j ω_j design_j (missing rows dropped).
Eigen::MatrixXd sur_residuals(const CombinationDesign& design, const Eigen::VectorXd& weights);

/// ȳ = S (b + sum_j ω_j d_j), for an n-vector prior draw and n-vector updates.
Eigen::VectorXd combine(const Eigen::VectorXd& prior_draw, const std::vector<Eigen::VectorXd>& level_updates,
                        const Eigen::VectorXd& weights, const Eigen::MatrixXd& S);

}  // namespace cohere
