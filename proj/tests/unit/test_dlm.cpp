#include <doctest.h>

#include <cmath>

#include "cohere/dlm.hpp"
#include "cohere/random.hpp"
#include "helpers.hpp"

using namespace cohere;

namespace {

Panel single_series(const std::vector<double>& y) {
    Panel p;
    p.dates = month_range({2000, 1}, static_cast<Eigen::Index>(y.size()));
    p.ids = {"y"};
    p.values.resize(static_cast<Eigen::Index>(y.size()), 1);
    for (std::size_t t = 0; t < y.size(); ++t) p.values(static_cast<Eigen::Index>(t), 0) = y[t];
    return p;
}

DlmPrior scalar_prior(double mean, double cov, double dof, double scale, Eigen::Index n = 1) {
    DlmPrior prior;
    prior.mean = Eigen::MatrixXd::Constant(1, n, mean);
    prior.cov = Eigen::MatrixXd::Constant(1, 1, cov);
    prior.dof = dof;
    prior.scale = Eigen::VectorXd::Constant(n, scale);
    return prior;
}

}  // namespace

TEST_SUITE("dlm") {
    TEST_CASE("spec construction") {
        const DlmSpec s = build_dlm_spec(12, 0.995);
        CHECK(s.p() == 12);
        CHECK(build_dlm_spec(0, 1.0).p() == 1);
        CHECK_THROWS(build_dlm_spec(1, 0.995));
        CHECK_THROWS(build_dlm_spec(12, 0.0));
        CHECK_THROWS(build_dlm_spec(12, 1.5));
        // G advances the seasonal cycle: G^12 leaves the state unchanged.
        Eigen::MatrixXd Gs = Eigen::MatrixXd::Identity(12, 12);
        for (int i = 0; i < 12; ++i) Gs = s.G * Gs;
        CHECK((Gs - Eigen::MatrixXd::Identity(12, 12)).norm() < 1e-12);
    }

    TEST_CASE("filter equals a hand-coded scalar recursion") {
        const std::vector<double> y = {1.0, 1.4, 0.7, 2.1, 1.9, 2.5, 2.2, 3.0, 2.7, 3.3};
        for (double delta : {0.9, 1.0}) {
            const DlmSpec spec = build_dlm_spec(0, delta);
            const FilterState fs = forward_filter(spec, single_series(y), scalar_prior(0.5, 10.0, 1.0, 2.0));
            double m = 0.5, C = 10.0, dof = 1.0, ssq = 2.0;
            for (std::size_t t = 0; t < y.size(); ++t) {
                const double a = m;
                const double R = C / delta;
                const double q = R + 1.0;
                const double A = R / q;
                const double e = y[t] - a;
                m = a + A * e;
                C = R - A * A * q;
                dof += 1.0;
                ssq += e * e / q;
                const auto ts = static_cast<Eigen::Index>(t);
                CHECK(std::abs(fs.forecast(ts, 0) - a) < 1e-10);
                CHECK(std::abs(fs.m[t](0, 0) - m) < 1e-10);
                CHECK(std::abs(fs.groups[0].C[t](0, 0) - C) < 1e-10);
                CHECK(std::abs(fs.groups[0].q[t] - q) < 1e-10);
                CHECK(std::abs(fs.error(ts, 0) - e) < 1e-10);
            }
            CHECK(std::abs(fs.obs_scale(0) - ssq / dof) < 1e-10);
        }
    }

    TEST_CASE("constant series is learned exactly") {
        const std::vector<double> y(40, 3.5);
        const FilterState fs = forward_filter(build_dlm_spec(0, 1.0), single_series(y));
        CHECK(std::abs(fs.m.back()(0, 0) - 3.5) < 1e-9);
        CHECK(std::abs(fs.error(39, 0)) < 1e-9);
    }

    TEST_CASE("seasonal signal is tracked") {
        std::vector<double> y;
        for (int t = 0; t < 120; ++t) y.push_back(50.0 + 10.0 * std::sin(2.0 * M_PI * t / 12.0));
        const FilterState fs = forward_filter(build_dlm_spec(12, 0.995), single_series(y));
        std::vector<double> late_err, signal;
        for (int t = 36; t < 120; ++t) {
            late_err.push_back(fs.error(t, 0));
            signal.push_back(y[static_cast<std::size_t>(t)]);
        }
        double ms = 0.0;
        for (double e : late_err) ms += e * e;
        ms /= static_cast<double>(late_err.size());
        CHECK(ms < 0.01 * testing::variance(signal));
    }

    TEST_CASE("FFBS draws match smoother moments") {
        const std::vector<double> y = {0.3, -0.2, 0.9, 1.4, 0.8, 1.9, 1.1, 0.6, 1.6, 2.0};
        const double delta = 0.95, sigma2 = 1.0;
        const DlmSpec spec = build_dlm_spec(0, delta);
        const FilterState fs = forward_filter(spec, single_series(y), scalar_prior(0.0, 4.0, 1.0, sigma2));

        // Independent forward pass and RTS smoother in raw units with V = sigma2.
        const std::size_t T = y.size();
        std::vector<double> a(T), R(T), m(T), C(T);
        double mp = 0.0, Cp = 4.0 * sigma2;
        for (std::size_t t = 0; t < T; ++t) {
            a[t] = mp;
            R[t] = Cp / delta;
            const double Q = R[t] + sigma2;
            m[t] = a[t] + R[t] / Q * (y[t] - a[t]);
            C[t] = R[t] - R[t] * R[t] / Q;
            mp = m[t];
            Cp = C[t];
        }
        std::vector<double> s(T), Sv(T);
        s[T - 1] = m[T - 1];
        Sv[T - 1] = C[T - 1];
        for (std::size_t k = T - 1; k-- > 0;) {
            const double B = C[k] / R[k + 1];
            s[k] = m[k] + B * (s[k + 1] - a[k + 1]);
            Sv[k] = C[k] + B * B * (Sv[k + 1] - R[k + 1]);
        }

        const SeriesCovariance cov = SeriesCovariance::diagonal(Eigen::VectorXd::Constant(1, sigma2));
        Rng rng(42);
        const int N = 2000;
        std::vector<std::vector<double>> draws(T);
        for (int d = 0; d < N; ++d) {
            const StateDraw sd = backward_sample(fs, cov, rng);
            for (std::size_t t = 0; t < T; ++t) draws[t].push_back(sd.theta[t](0, 0));
        }
        for (std::size_t t = 0; t < T; ++t) {
            const double mean = testing::mean(draws[t]);
            const double var = testing::variance(draws[t]);
            CHECK(std::abs(mean - s[t]) < 4.0 * std::sqrt(Sv[t] / N));
            CHECK(std::abs(var - Sv[t]) < 4.0 * Sv[t] * std::sqrt(2.0 / (N - 1)));
        }
    }

    TEST_CASE("FFBS noise carries the cross-series covariance") {
        Panel p;
        p.dates = month_range({2000, 1}, 6);
        p.ids = {"a", "b"};
        p.values.resize(6, 2);
        p.values << 1, 2, 1.2, 1.8, 0.9, 2.2, 1.1, 2.1, 1.3, 1.9, 1.0, 2.0;
        const FilterState fs = forward_filter(build_dlm_spec(0, 0.9), p, scalar_prior(0.0, 4.0, 1.0, 1.0, 2));
        SeriesCovariance cov;
        cov.scales = Eigen::VectorXd::Ones(2);
        cov.loadings = Eigen::MatrixXd::Constant(2, 1, 1.0);
        cov.factor_cov = Eigen::MatrixXd::Constant(1, 1, 0.5);
        cov.idiosyncratic = Eigen::VectorXd::Constant(2, 0.5);
        // Var(r) = [[1, .5], [.5, 1]]; Cov(theta_a, theta_b) at T should be 0.5 C_T.
        Rng rng(8);
        const int N = 20000;
        std::vector<double> xa, xb;
        for (int d = 0; d < N; ++d) {
            const StateDraw sd = backward_sample(fs, cov, rng);
            xa.push_back(sd.theta.back()(0, 0));
            xb.push_back(sd.theta.back()(0, 1));
        }
        const double ma = testing::mean(xa), mb = testing::mean(xb);
        double c = 0.0;
        for (int i = 0; i < N; ++i) c += (xa[static_cast<std::size_t>(i)] - ma) * (xb[static_cast<std::size_t>(i)] - mb);
        c /= N - 1;
        const double CT = fs.groups[0].C.back()(0, 0);
        CHECK(c == doctest::Approx(0.5 * CT).epsilon(0.05));
    }

    TEST_CASE("vanishing noise collapses the draws") {
        const std::vector<double> y(12, 4.0);
        const FilterState fs = forward_filter(build_dlm_spec(0, 1.0), single_series(y));
        Rng rng(1);
        const StateDraw sd = backward_sample(fs, SeriesCovariance::diagonal(Eigen::VectorXd::Constant(1, 1e-14)), rng);
        for (const auto& th : sd.theta) CHECK(std::abs(th(0, 0) - 4.0) < 1e-6);
    }

    TEST_CASE("forecast prior") {
        const std::vector<double> y(20, 7.0);
        const FilterState fs = forward_filter(build_dlm_spec(0, 1.0), single_series(y));
        Rng rng(2);
        const SeriesCovariance cov = SeriesCovariance::diagonal(Eigen::VectorXd::Constant(1, 1.0));
        const StateDraw sd = backward_sample(fs, cov, rng);
        const Eigen::MatrixXd path = forecast_prior(fs, sd, 6, cov, rng);
        for (int h = 0; h < 6; ++h) CHECK(path(h, 0) == sd.theta.back()(0, 0));
        CHECK(std::abs(path(0, 0) - 7.0) < 0.5);

        std::vector<double> ys;
        for (int t = 0; t < 48; ++t) ys.push_back(10.0 + 3.0 * std::cos(2.0 * M_PI * t / 12.0) + 0.1 * std::sin(t * 1.7));
        const FilterState fss = forward_filter(build_dlm_spec(12, 1.0), single_series(ys));
        const StateDraw sds = backward_sample(fss, cov, rng);
        const Eigen::MatrixXd ps = forecast_prior(fss, sds, 24, cov, rng);
        for (int h = 0; h < 12; ++h) CHECK(std::abs(ps(h, 0) - ps(h + 12, 0)) < 1e-9);

        const FilterState fsd = forward_filter(build_dlm_spec(12, 0.95), single_series(ys));
        const Eigen::VectorXd v = forecast_state_variance(fsd, 24);
        // The seasonal part of the state variance cycles, so single steps may dip by
        // rounding-level amounts while every full cycle adds evolution variance.
        for (int h = 1; h < 24; ++h) CHECK(v(h) >= v(h - 1) * (1.0 - 1e-6));
        for (int h = 0; h < 12; ++h) CHECK(v(h + 12) > v(h));
        const FilterState fl = forward_filter(build_dlm_spec(0, 0.95), single_series(ys));
        const Eigen::VectorXd vl = forecast_state_variance(fl, 24);
        for (int h = 1; h < 24; ++h) CHECK(vl(h) > vl(h - 1));
        CHECK_THROWS(forecast_prior(fs, sd, 0, cov, rng));
    }

    TEST_CASE("residuals") {
        const DlmSpec spec = build_dlm_spec(0, 1.0);
        StateDraw sd;
        Panel p;
        p.dates = month_range({2000, 1}, 3);
        p.ids = {"a", "b"};
        p.values.resize(3, 2);
        for (int t = 0; t < 3; ++t) {
            Eigen::MatrixXd th(1, 2);
            th << t, 2 * t;
            sd.theta.push_back(th);
            p.values(t, 0) = t;
            p.values(t, 1) = 2 * t;
        }
        CHECK(residuals(spec, p, sd).values.norm() == 0.0);
        Panel shifted = p;
        shifted.values.col(1).array() += 5.0;
        const Panel r = residuals(spec, shifted, sd);
        CHECK(r.values.col(0).norm() == 0.0);
        CHECK((r.values.col(1).array() == 5.0).all());
        CHECK(r.series() == 2);
    }

    TEST_CASE("missing cells and input errors") {
        Panel p;
        p.dates = month_range({2000, 1}, 8);
        p.ids = {"a", "b"};
        p.values.resize(8, 2);
        for (int t = 0; t < 8; ++t) {
            p.values(t, 0) = 1.0 + 0.1 * t;
            p.values(t, 1) = 2.0 - 0.1 * t;
        }
        p.values(3, 1) = kMissing;
        const FilterState fs = forward_filter(build_dlm_spec(0, 0.95), p);
        CHECK(fs.groups.size() == 2);
        CHECK(is_missing(fs.error(3, 1)));
        CHECK(std::isfinite(fs.m.back()(0, 1)));
        Rng rng(3);
        const StateDraw sd = backward_sample(fs, SeriesCovariance::diagonal(Eigen::VectorXd::Ones(2)), rng);
        CHECK(std::isfinite(sd.theta[3](0, 1)));

        CHECK_THROWS(forward_filter(build_dlm_spec(12, 0.995), p));  // T < p
        Panel bad = p;
        bad.values(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS(forward_filter(build_dlm_spec(0, 0.95), bad));
    }
}
