#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cohere {

/// Seedable random source. Every sampler in the library draws through this
/// type so that a (seed, stream) pair reproduces a run bit-exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent substream derived deterministically from a base seed and
    /// a list of stream coordinates (chain, sweep, block, ...).
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

    double uniform();
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    /// Gamma with the given shape and rate (mean shape / rate).
    double gamma(double shape, double rate);
    double chi_squared(double dof) { return gamma(0.5 * dof, 0.5); }
    std::size_t index(std::size_t n);

    Eigen::VectorXd normal_vector(Eigen::Index n);
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal CDF and its complement, computed without cancellation in
/// either tail.
double normal_cdf(double x);
double normal_sf(double x);

/// Draw from N(mean, sd^2) restricted to [lo, hi] by inverting the CDF of the
/// truncated law; falls back to exponential rejection when the interval sits
/// so far in a tail that its probability mass underflows.
double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi);

/// Wishart(dof, scale) draw via the Bartlett decomposition; E[W] = dof * scale.
Eigen::MatrixXd wishart(Rng& rng, double dof, const Eigen::MatrixXd& scale);

}  // namespace cohere
