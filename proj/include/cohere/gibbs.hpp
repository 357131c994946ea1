#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cohere/forecasts.hpp"
#include "cohere/panel.hpp"

namespace cohere {

class Hierarchy;

struct GibbsConfig {
    int warmup = 1000;
    int samples = 2000;
    int thin = 2;
    int chains = 1;
    std::uint64_t seed = 1;
    double discount = 0.995;
    int horizon = 12;
    int seasonal_period = 12;
    std::vector<std::string> factor_levels;       // empty: the hierarchy's own
    std::vector<std::string> combination_series;  // empty: all factor nodes
    double initial_rho = 0.1;
    bool record_trace = false;  // keep the block execution order of every sweep

    void validate() const;
    int kept_per_chain() const { return (samples + thin - 1) / thin; }
};

/// Thrown when a sampled quantity breaks a model invariant.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Worst values seen by the per-sweep invariant checks.
struct InvariantSummary {
    long sweeps = 0;
    double max_coherence_error = 0.0;  // relative to max(1, |ȳ|_max)
    double max_weight_sum_error = 0.0;
    double min_rho = 1.0;
    double max_rho = 0.0;
    double min_psd_margin = 0.0;  // smallest eigenvalue of Var(r) - Σ_d, relative
    long psd_checks = 0;
};

struct PosteriorSamples {
    std::vector<std::string> node_ids;
    std::vector<std::string> weight_levels;      // levels carrying base forecasts, one ω each
    std::vector<std::size_t> calibrated_nodes;   // nodes with base forecasts
    std::vector<std::size_t> combination_nodes;  // selected SUR equations
    int horizon = 0;
    int chains = 0;
    int draws_per_chain = 0;

    std::vector<Eigen::MatrixXd> paths;  // chain-major kept draws, H x m each
    Eigen::MatrixXd rho;                 // draws x m
    Eigen::VectorXd rho0;                // draws
    Eigen::MatrixXd weights;             // draws x k
    Eigen::MatrixXd factor_variance;     // draws x q, diagonal of Σ_f
    Eigen::MatrixXd loadings_mean;       // n x q
    Eigen::MatrixXd factor_cov_mean;     // q x q

    std::map<std::string, double> rhat;
    std::vector<std::string> trace;
    InvariantSummary invariants;

    std::size_t draw_count() const { return paths.size(); }
    Eigen::MatrixXd mean_path() const;
};

/// Full sampler. Each sweep runs the blocks in the order ts, fm, cal, prop, comb:
/// states and residuals given the previous residual covariance, the factor
/// model given the residuals, calibration, level propagation and then the
/// combination weights and error precision.
PosteriorSamples run_reconciliation(const GibbsConfig& config, const Hierarchy& hierarchy, const Panel& atomic_panel,
                                    const BaseForecasts& base_forecasts);

}  // namespace cohere
