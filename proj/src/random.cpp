#include "cohere/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "cohere/linalg.hpp"

namespace cohere {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(seed);
    for (auto c : coords) h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
    return Rng(h);
}

double Rng::uniform() {
    // 53 random bits in (0, 1); never returns exactly 0 or 1.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(engine_);
}

double Rng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be positive");
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(engine_);
}

std::size_t Rng::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
    return z;
}

Eigen::MatrixXd Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal();
    return z;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace {

// Inverse of normal_sf for p in (0, 1).
double normal_isf(double p) { return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

// Robert (1995) translated-exponential rejection for z in [a, b], a > 0.
double tail_rejection(Rng& rng, double a, double b) {
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double z = a - std::log(rng.uniform()) / lambda;
        if (z > b) continue;
        const double accept = std::exp(-0.5 * (z - lambda) * (z - lambda));
        if (rng.uniform() <= accept) return z;
    }
}

// Standardised draw on [a, b] with a >= 0, using upper-tail probabilities.
double upper_interval(Rng& rng, double a, double b) {
    const double pa = normal_sf(a);
    const double pb = normal_sf(b);
    const double mass = pa - pb;
    if (!(mass > 1e-300) || mass < 1e-12 * pa) return tail_rejection(rng, a, b);
    const double u = rng.uniform();
    const double z = normal_isf(pa - u * mass);
    return std::clamp(z, a, b);
}

}  // namespace

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("truncated_normal: empty interval");
    if (!(sd > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("truncated_normal: invalid moments");
    const double a = (lo - mean) / sd;
    const double b = (hi - mean) / sd;
    double z;
    if (a >= 0.0) {
        z = upper_interval(rng, a, b);
    } else if (b <= 0.0) {
        z = -upper_interval(rng, -b, -a);
    } else {
        const double pa = normal_cdf(a);
        const double pb = normal_cdf(b);
        const double u = rng.uniform();
        const double p = pa + u * (pb - pa);
        z = p < 0.5 ? -normal_isf(p) : normal_isf(1.0 - p);
        z = std::clamp(z, a, b);
    }
    return std::clamp(mean + sd * z, lo, hi);
}

Eigen::MatrixXd wishart(Rng& rng, double dof, const Eigen::MatrixXd& scale) {
    const Eigen::Index q = scale.rows();
    if (scale.cols() != q) throw std::invalid_argument("wishart: scale must be square");
    if (!(dof > static_cast<double>(q) - 1.0)) throw std::invalid_argument("wishart: dof must exceed dimension - 1");
    const Eigen::MatrixXd L = cholesky_lower(scale, "wishart scale");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        A(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
    }
    const Eigen::MatrixXd LA = L * A;
    Eigen::MatrixXd W = LA * LA.transpose();
    return 0.5 * (W + W.transpose());
}

}  // namespace cohere
