#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cohere/covariance.hpp"
#include "cohere/panel.hpp"

namespace cohere {

class Rng;

/// Exchangeable DLM structure shared by every atomic series: a local level
/// plus optional sum-to-zero seasonal factors.
struct DlmSpec {
    int seasonal_period = 0;  // 0 = no seasonal block
    double discount = 0.995;
    Eigen::VectorXd F;  // p
    Eigen::MatrixXd G;  // p x p

    Eigen::Index p() const { return F.size(); }
};

/// seasonal_period must be 0 or >= 2; discount in (0, 1].
DlmSpec build_dlm_spec(int seasonal_period, double discount = 0.995);

/// Initial state prior. `cov` is in units of each series' observation
/// variance (the filter is scale-free), so one matrix serves every series.
struct DlmPrior {
    Eigen::MatrixXd mean;   // p x n
    Eigen::MatrixXd cov;    // p x p
    double dof = 1.0;
    Eigen::VectorXd scale;  // n, prior observation variance estimates
};

/// Diffuse prior: level and seasonal means from the first seasonal cycle,
/// cov = 1e7 * I, unit prior degrees of freedom, scale = sample variance.
DlmPrior default_dlm_prior(const DlmSpec& spec, const Panel& atomic_panel);

/// Forward-filtered moments. Series sharing a missing-data pattern share one
/// covariance sequence; with a fully observed panel there is a single group.
struct FilterState {
    struct Group {
        std::vector<Eigen::Index> series;
        std::vector<Eigen::MatrixXd> R;  // prior state covariance at t
        std::vector<Eigen::MatrixXd> C;  // posterior state covariance at t
        std::vector<double> q;           // one-step forecast scale at t
        Eigen::MatrixXd C0;
    };

    DlmSpec spec;
    Eigen::Index periods = 0;
    Eigen::Index series = 0;
    std::vector<Eigen::MatrixXd> a;  // prior means, p x n per t
    std::vector<Eigen::MatrixXd> m;  // posterior means, p x n per t
    Eigen::MatrixXd forecast;        // T x n one-step forecast means
    Eigen::MatrixXd error;           // T x n one-step errors (NaN when missing)
    Eigen::VectorXd dof;             // n
    Eigen::VectorXd obs_scale;       // n, final variance estimates
    std::vector<Group> groups;
    std::vector<std::size_t> group_of;  // series -> group

    const Group& group_for(Eigen::Index j) const { return groups[group_of[static_cast<std::size_t>(j)]]; }
};

/// Discount DLM filter: R_t = G C_{t-1} G' / delta (i.e. W_t = (1-delta)/delta G C_{t-1} G'),
/// with per-series variance learning. Missing cells skip the series'
/// measurement update.
FilterState forward_filter(const DlmSpec& spec, const Panel& atomic_panel,
                           const std::optional<DlmPrior>& prior = std::nullopt);

/// Sampled states, one p x n matrix per period.
struct StateDraw {
    std::vector<Eigen::MatrixXd> theta;

    Eigen::Index periods() const { return static_cast<Eigen::Index>(theta.size()); }
};

/// Joint draw of all states given the cross-series covariance Var(r): the
/// state noise is matrix-normal with row covariance from the filter and
/// column covariance `obs_cov`.
StateDraw backward_sample(const FilterState& filter, const SeriesCovariance& obs_cov, Rng& rng);

/// H x n prior forecast path for one state draw: the last state is propagated
/// with G and evolution noise W = (1-delta)/delta G C_T G' scaled by obs_cov,
/// and mapped through F.
Eigen::MatrixXd forecast_prior(const FilterState& filter, const StateDraw& draw, int horizon,
                               const SeriesCovariance& obs_cov, Rng& rng);

/// Scale-free variance of F' theta_{T+h} given the filtered posterior at T,
/// h = 1..horizon (multiply by a series' variance for raw units).
Eigen::VectorXd forecast_state_variance(const FilterState& filter, int horizon, Eigen::Index series = 0);

/// r_{t,j} = b_{t,j} - F' theta_{t,j}.
Panel residuals(const DlmSpec& spec, const Panel& atomic_panel, const StateDraw& draw);

/// Fitted signal F' theta_{t,j} as a T x n matrix.
Eigen::MatrixXd fitted_signal(const DlmSpec& spec, const StateDraw& draw);

}  // namespace cohere
