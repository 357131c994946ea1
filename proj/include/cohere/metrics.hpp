#pragma once

#include <Eigen/Dense>

namespace cohere {

class Rng;

/// S (S'S)^{-1} S' ŷ. Throws std::invalid_argument when S lacks full column rank.
Eigen::VectorXd ols_reconcile(const Eigen::VectorXd& base, const Eigen::MatrixXd& S);

/// OLS projection using only the rows with a finite base forecast; the
/// result covers every node. Needs the observed rows of S to have full column rank.
Eigen::VectorXd ols_reconcile_partial(const Eigen::VectorXd& base, const Eigen::MatrixXd& S);

/// 1 - sum (x - x̂)^2 / sum (x - x̄)^2. Throws on an empty input or a zero denominator.
double oos_r2(const Eigen::VectorXd& forecast, const Eigen::VectorXd& actual, const Eigen::VectorXd& benchmark);

enum class EnergyMode { Automatic, Exact, Resampled };

inline constexpr std::size_t kExactEnergyLimit = 2000;
inline constexpr std::size_t kEnergyPairs = 10000;

/// Energy score with α = 1 for draws stored as rows of `samples`:
///   E|X - y| - 0.5 E|X - X'|.
/// Exact mode enumerates all ordered pairs (with replacement). Resampled mode
/// draws kEnergyPairs independent pairs and averages the first term over both
/// members of each pair, which keeps every estimate non-negative. Automatic
/// picks exact enumeration up to kExactEnergyLimit draws.
double energy_score(const Eigen::MatrixXd& samples, const Eigen::VectorXd& realization, Rng& rng,
                    EnergyMode mode = EnergyMode::Automatic);

}  // namespace cohere
