#include <doctest.h>

#include <cmath>

#include "cohere/calibration.hpp"
#include "cohere/random.hpp"
#include "cohere/simulate.hpp"
#include "helpers.hpp"

using namespace cohere;

namespace {

// Posterior mean of rho for each column after a short chain.
Eigen::VectorXd posterior_rho(const Eigen::MatrixXd& r, const Eigen::MatrixXd& g, std::uint64_t seed, int sweeps = 600,
                              double* rho0_mean = nullptr) {
    const Standardized rs = standardize(r), gs = standardize(g);
    CalibrationState st = CalibrationState::initial(r.cols());
    Rng rng(seed);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(r.cols());
    double acc0 = 0.0;
    int kept = 0;
    for (int s = 0; s < sweeps; ++s) {
        st = sample_calibration(rs.values, gs.values, st, rng);
        REQUIRE(st.rho.minCoeff() >= 0.0);
        REQUIRE(st.rho.maxCoeff() <= 1.0);
        if (s >= sweeps / 4) {
            acc += st.rho;
            acc0 += st.rho0;
            ++kept;
        }
    }
    if (rho0_mean) *rho0_mean = acc0 / kept;
    return acc / kept;
}

}  // namespace

TEST_SUITE("calibration") {
    TEST_CASE("standardize") {
        Eigen::MatrixXd x(3, 2);
        x << 1, 5, 2, 5, 3, 5.000001;
        CHECK_NOTHROW(standardize(x));
        Eigen::MatrixXd y(3, 1);
        y << 1, 2, 3;
        const Standardized s = standardize(y);
        CHECK(s.scales(0) == doctest::Approx(1.0));
        CHECK(s.values(0, 0) == doctest::Approx(-1.0));
        CHECK(s.values(1, 0) == doctest::Approx(0.0));
        CHECK(s.values(2, 0) == doctest::Approx(1.0));
        const Standardized again = standardize(s.values);
        CHECK((again.values - s.values).norm() < 1e-14);
        CHECK(again.scales(0) == doctest::Approx(1.0));
        Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 1, 2.0);
        CHECK_THROWS(standardize(c));
        Eigen::MatrixXd miss(3, 1);
        miss << 1, kMissing, 3;
        const Standardized sm = standardize(miss);
        CHECK(std::isnan(sm.values(1, 0)));
    }

    TEST_CASE("identical forecasts push rho to the upper bound") {
        Rng rng(1);
        const Eigen::MatrixXd r = rng.normal_matrix(500, 1);
        const Eigen::VectorXd post = posterior_rho(r, r, 2);
        CHECK(post(0) > 0.95);
    }

    TEST_CASE("independent forecasts push rho towards zero") {
        Rng rng(3);
        const Eigen::MatrixXd r = rng.normal_matrix(500, 1);
        const Eigen::MatrixXd g = rng.normal_matrix(500, 1);
        const Eigen::VectorXd post = posterior_rho(r, g, 4);
        CHECK(post(0) < 0.12);
    }

    TEST_CASE("no data reproduces the prior") {
        CalibrationState st = CalibrationState::initial(3);
        Rng rng(5);
        std::vector<double> rho0;
        const Eigen::MatrixXd empty(0, 3);
        for (int s = 0; s < 20000; ++s) {
            st = sample_calibration(empty, empty, st, rng, {false, false, false});
            REQUIRE(st.rho.minCoeff() >= 0.0);
            REQUIRE(st.rho.maxCoeff() <= 1.0);
            rho0.push_back(st.rho0);
        }
        CHECK(std::abs(testing::mean(rho0)) < 0.02);
        CHECK(std::sqrt(testing::variance(rho0)) == doctest::Approx(0.5).epsilon(0.03));

        CalibrationState st2 = CalibrationState::initial(2);
        for (int s = 0; s < 200; ++s) {
            st2 = sample_calibration(empty.leftCols(2), empty.leftCols(2), st2, rng);
            REQUIRE(st2.rho.minCoeff() >= 0.0);
            REQUIRE(st2.rho.maxCoeff() <= 1.0);
            REQUIRE(std::isfinite(st2.rho0));
        }
    }

    TEST_CASE("posterior means order with the true calibration") {
        std::vector<double> means;
        for (double rho : {0.2, 0.5, 0.8}) {
            Rng rng(static_cast<std::uint64_t>(rho * 100));
            const Eigen::MatrixXd r = rng.normal_matrix(500, 1);
            const Eigen::MatrixXd g = simulate_base_forecasts(r, Eigen::VectorXd::Constant(1, rho), Eigen::VectorXd::Ones(1), rng);
            means.push_back(posterior_rho(r, g, 7)(0));
        }
        CHECK(means[0] < means[1]);
        CHECK(means[1] < means[2]);
    }

    TEST_CASE("shrinkage reduces dispersion") {
        Rng rng(8);
        const Eigen::Index T = 40, m = 20;
        const Eigen::MatrixXd r = rng.normal_matrix(T, m);
        const Eigen::MatrixXd g = simulate_base_forecasts(r, Eigen::VectorXd::Constant(m, 0.5), Eigen::VectorXd::Ones(m), rng);
        const Standardized rs = standardize(r), gs = standardize(g);
        std::vector<double> mle, post;
        const Eigen::VectorXd pm = posterior_rho(r, g, 9, 800);
        for (Eigen::Index i = 0; i < m; ++i) {
            mle.push_back(gs.values.col(i).dot(rs.values.col(i)) / gs.values.col(i).squaredNorm());
            post.push_back(pm(i));
        }
        CHECK(testing::variance(post) < testing::variance(mle));
    }

    TEST_CASE("input errors") {
        CalibrationState st = CalibrationState::initial(2);
        Rng rng(1);
        Eigen::MatrixXd r = Eigen::MatrixXd::Ones(3, 2);
        Eigen::MatrixXd g = Eigen::MatrixXd::Ones(3, 2);
        g(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS(sample_calibration(r, g, st, rng));
        CHECK_THROWS(sample_calibration(r, Eigen::MatrixXd::Ones(3, 1), st, rng));
    }
}
