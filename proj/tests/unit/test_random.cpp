#include <doctest.h>

#include <cmath>

#include "cohere/linalg.hpp"
#include "cohere/random.hpp"
#include "helpers.hpp"

using namespace cohere;

TEST_SUITE("random") {
    TEST_CASE("streams are reproducible and distinct") {
        Rng a = Rng::stream(7, {1, 2, 3});
        Rng b = Rng::stream(7, {1, 2, 3});
        Rng c = Rng::stream(7, {1, 2, 4});
        const double x = a.normal();
        CHECK(x == b.normal());
        CHECK(x != c.normal());
    }

    TEST_CASE("truncated normal moments match the closed form") {
        // mean of N(0.3, 0.5^2) on [0, 1] via the standard formula
        const double mu = 0.3, sd = 0.5, lo = 0.0, hi = 1.0;
        const double a = (lo - mu) / sd, b = (hi - mu) / sd;
        auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
        const double Z = normal_cdf(b) - normal_cdf(a);
        const double expected = mu + sd * (phi(a) - phi(b)) / Z;
        Rng rng(11);
        std::vector<double> draws;
        for (int i = 0; i < 200000; ++i) {
            const double v = truncated_normal(rng, mu, sd, lo, hi);
            REQUIRE(v >= lo);
            REQUIRE(v <= hi);
            draws.push_back(v);
        }
        const double se = std::sqrt(testing::variance(draws) / draws.size());
        CHECK(std::abs(testing::mean(draws) - expected) < 4.0 * se);
    }

    TEST_CASE("truncated normal far in the tail stays in range") {
        Rng rng(3);
        for (int i = 0; i < 1000; ++i) {
            const double v = truncated_normal(rng, -40.0, 0.1, 0.0, 1.0);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            const double w = truncated_normal(rng, 40.0, 0.1, 0.0, 1.0);
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
        }
        CHECK_THROWS(truncated_normal(rng, 0.0, 1.0, 1.0, 1.0));
    }

    TEST_CASE("wishart mean is dof times scale") {
        Eigen::MatrixXd scale(2, 2);
        scale << 2.0, 0.5, 0.5, 1.0;
        const double dof = 5.0;
        Rng rng(5);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
        const int N = 10000;
        for (int i = 0; i < N; ++i) acc += wishart(rng, dof, scale);
        acc /= N;
        const Eigen::MatrixXd expected = dof * scale;
        CHECK((acc - expected).norm() / expected.norm() < 0.05);
    }

    TEST_CASE("gamma moments") {
        Rng rng(9);
        std::vector<double> d;
        for (int i = 0; i < 100000; ++i) d.push_back(rng.gamma(3.0, 2.0));
        CHECK(testing::mean(d) == doctest::Approx(1.5).epsilon(0.02));
        CHECK(testing::variance(d) == doctest::Approx(0.75).epsilon(0.05));
    }

    TEST_CASE("cholesky jitter and failure") {
        Eigen::MatrixXd m(2, 2);
        m << 1.0, 1.0, 1.0, 1.0;  // singular PSD
        const Eigen::MatrixXd L = cholesky_lower(m);
        CHECK((L * L.transpose() - m).norm() < 1e-6);
        Eigen::MatrixXd bad(2, 2);
        bad << 1.0, 0.0, 0.0, -1.0;
        CHECK_THROWS_AS(cholesky_lower(bad), NumericalError);
        CHECK(cholesky_lower(Eigen::MatrixXd::Zero(3, 3)).norm() == 0.0);
    }
}
