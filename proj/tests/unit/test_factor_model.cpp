#include <doctest.h>

#include <cmath>

#include "cohere/calibration.hpp"
#include "cohere/factor_model.hpp"
#include "cohere/hierarchy.hpp"
#include "cohere/linalg.hpp"
#include "cohere/random.hpp"
#include "helpers.hpp"

using namespace cohere;

TEST_SUITE("factor_model") {
    TEST_CASE("exposure masks") {
        const ExposureMask tiny = exposure_mask(testing::tiny_hierarchy());
        CHECK(tiny.rows() == 2);
        CHECK(tiny.cols() == 1);
        CHECK(tiny.all());
        const ExposureMask g = exposure_mask(testing::grouped_hierarchy());
        CHECK(g.cols() == 3);
        for (Eigen::Index i = 0; i < 4; ++i) CHECK(g.row(i).count() == 2);
        HierarchySpec none = testing::tiny_hierarchy().spec();
        none.factor_levels.clear();
        CHECK_THROWS(exposure_mask(Hierarchy::build(none)));
    }

    TEST_CASE("factor posterior equals the ridge solution") {
        Rng rng(1);
        const Eigen::MatrixXd D = rng.normal_matrix(5, 2);
        const Eigen::VectorXd r = rng.normal_vector(5);
        const double h = 2.5;
        const GaussianPosterior post = factor_posterior(r, D, h);
        const Eigen::MatrixXd P = h * D.transpose() * D + Eigen::MatrixXd::Identity(2, 2);
        const Eigen::VectorXd mean = P.inverse() * D.transpose() * r * h;
        CHECK((post.mean - mean).norm() < 1e-12);
        CHECK((post.cov - P.inverse()).norm() < 1e-12);
    }

    TEST_CASE("noiseless single factor recovers the cross-sectional mean") {
        const Eigen::Index n = 1000;
        Eigen::VectorXd r = Eigen::VectorXd::Constant(n, 1.7);
        const GaussianPosterior post = factor_posterior(r, Eigen::MatrixXd::Ones(n, 1), 1e6);
        CHECK(post.mean(0) == doctest::Approx(1.7).epsilon(1e-6));
    }

    TEST_CASE("zero loadings give prior factor draws") {
        Rng rng(2);
        const Eigen::Index T = 20000;
        const Eigen::MatrixXd r = rng.normal_matrix(T, 6);
        const FactorDraw fd = sample_factors(r, Eigen::MatrixXd::Zero(6, 2), Eigen::VectorXd::Ones(T), rng);
        for (Eigen::Index j = 0; j < 2; ++j) {
            const Eigen::VectorXd c = fd.factors.col(j);
            CHECK(std::abs(c.mean()) < 4.0 / std::sqrt(static_cast<double>(T)));
            CHECK(c.squaredNorm() / T == doctest::Approx(1.0).epsilon(0.05));
        }
    }

    TEST_CASE("too few series for the factors") {
        Rng rng(3);
        Eigen::MatrixXd r = rng.normal_matrix(4, 2);
        r(1, 0) = kMissing;
        CHECK_THROWS(sample_factors(r, Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(4), rng));
    }

    TEST_CASE("rotation zeroes cross-level covariance and keeps the span") {
        Rng rng(4);
        const Eigen::Index T = 400;
        Eigen::MatrixXd f(T, 2);
        const Eigen::VectorXd z1 = rng.normal_vector(T), z2 = rng.normal_vector(T);
        f.col(0) = z1;
        f.col(1) = 0.5 * z1 + std::sqrt(0.75) * z2;
        const Eigen::MatrixXd rot = rotate_factors(f, {1, 1});
        const Eigen::MatrixXd cov = sample_covariance(rot);
        CHECK(std::abs(cov(0, 1)) < 1e-12 * cov.diagonal().maxCoeff());
        const Eigen::MatrixXd S0 = sample_covariance(f);
        CHECK(cov(1, 1) == doctest::Approx(S0(1, 1)).epsilon(1e-10));
        Eigen::MatrixXd both(T, 4);
        both << f, rot;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(both);
        CHECK(lu.rank() == 2);

        // Already block diagonal: unchanged.
        Eigen::MatrixXd g = rng.normal_matrix(T, 3);
        const Eigen::MatrixXd same = rotate_factors(g, {3});
        CHECK((same - g).norm() < 1e-9 * g.norm());
        Eigen::MatrixXd singular(T, 2);
        singular << z1, z1;
        CHECK_THROWS_AS(rotate_factors(singular, {1, 1}), NumericalError);
    }

    TEST_CASE("sign enforcement") {
        Rng rng(5);
        const Eigen::VectorXd s = rng.normal_vector(50);
        Eigen::MatrixXd f(50, 1), sums(50, 1);
        f.col(0) = -s;
        sums.col(0) = s;
        CHECK((enforce_sign(f, sums) - (-f)).norm() == 0.0);
        CHECK((enforce_sign(-f, sums) - (-f)).norm() == 0.0);
        Eigen::MatrixXd a(4, 1), b(4, 1);
        a << 1, -1, 1, -1;
        b << 1, 1, -1, -1;  // orthogonal, zero correlation
        CHECK(enforce_sign(a, b) == a);
    }

    TEST_CASE("loadings regressions") {
        Rng rng(6);
        const Eigen::Index T = 500;
        Eigen::MatrixXd f = rng.normal_matrix(T, 2);
        Eigen::MatrixXd r(T, 1);
        r.col(0) = 0.8 * f.col(0) + 0.6 * rng.normal_vector(T);
        ExposureMask mask(1, 2);
        mask << true, false;
        double acc = 0.0;
        Eigen::VectorXd prec = Eigen::VectorXd::Ones(1);
        const int draws = 400;
        for (int d = 0; d < draws; ++d) {
            const LoadingsDraw ld = sample_loadings(r, f, mask, 1.0, prec, rng);
            prec = ld.ts_precision;
            acc += ld.loadings(0, 0);
            CHECK(std::abs(ld.loadings(0, 1)) < 1e-6);
        }
        CHECK(std::abs(acc / draws - 0.8) < 0.1);

        // f = 0: loadings are prior draws with sd 0.5.
        std::vector<double> v;
        for (int d = 0; d < 4000; ++d)
            v.push_back(sample_loadings(r, Eigen::MatrixXd::Zero(T, 2), mask, 0.5, prec, rng).loadings(0, 0));
        CHECK(std::sqrt(testing::variance(v)) == doctest::Approx(0.5).epsilon(0.05));
    }

    TEST_CASE("covariance assembly") {
        const Eigen::MatrixXd C = covariance(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Identity(1, 1),
                                             Eigen::VectorXd::Constant(2, 99.0), Eigen::VectorXd::Ones(2));
        Eigen::MatrixXd expected(2, 2);
        expected << 100, 1, 1, 100;
        CHECK(C == expected);
        const Eigen::MatrixXd D = covariance(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Identity(2, 2),
                                             Eigen::VectorXd::Constant(3, 2.0), Eigen::VectorXd::Constant(3, 3.0));
        CHECK(D == Eigen::MatrixXd(Eigen::VectorXd::Constant(3, 18.0).asDiagonal()));
        CHECK_THROWS(covariance(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Identity(2, 2),
                                Eigen::VectorXd::Constant(3, 0.0), Eigen::VectorXd::Ones(3)));

        // Aggregated covariance matches S Δ Σ Δ' S' + S D S'.
        const Hierarchy h = testing::grouped_hierarchy();
        Rng rng(7);
        const Eigen::MatrixXd L = rng.normal_matrix(4, 3);
        const Eigen::VectorXd d = rng.normal_vector(4).cwiseAbs().array() + 0.1;
        const Eigen::MatrixXd V = covariance(L, Eigen::MatrixXd::Identity(3, 3), d, Eigen::VectorXd::Ones(4));
        const Eigen::MatrixXd S = h.summing_matrix();
        const Eigen::MatrixXd direct =
            S * L * L.transpose() * S.transpose() + S * Eigen::MatrixXd(d.asDiagonal()) * S.transpose();
        CHECK((S * V * S.transpose() - direct).norm() < 1e-10);
    }

    TEST_CASE("loadings are recovered from simulated residuals") {
        // Three disjoint groups in one factor level identify every loading; with a
        // total factor above correlated group factors, cross-group covariance could
        // be carried by either, so that design is checked on the common covariance.
        Rng rng(2024);
        for (const bool nested : {false, true}) {
            const Hierarchy h = [nested] {
                HierarchySpec spec;
                HierarchySpec::Level total{"Total", {}}, grp{"Group", {}};
                for (int i = 0; i < 20; ++i) {
                    const std::string id = "s" + std::to_string(i);
                    spec.atomic.push_back(id);
                    total.labels[id] = "T";
                    grp.labels[id] = nested ? (i < 10 ? "g1" : "g2") : (i < 7 ? "g1" : (i < 14 ? "g2" : "g3"));
                }
                spec.levels = {total, grp};
                spec.factor_levels = nested ? std::vector<std::string>{"Total", "Group"} : std::vector<std::string>{"Group"};
                return Hierarchy::build(spec);
            }();
            const Eigen::Index T = 500, n = 20, q = 3;
            const ExposureMask mask = exposure_mask(h);
            REQUIRE(mask.cols() == q);
            Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(n, q);
            Eigen::VectorXd idio(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (nested) {
                    truth(i, 0) = 0.5 + 0.2 * rng.uniform();
                    truth(i, i < 10 ? 1 : 2) = 0.4 + 0.2 * rng.uniform();
                } else {
                    truth(i, i < 7 ? 0 : (i < 14 ? 1 : 2)) = 0.6 + 0.2 * rng.uniform();
                }
                idio(i) = 1.0 - truth.row(i).squaredNorm();
            }
            const Eigen::MatrixXd f = rng.normal_matrix(T, q);
            Eigen::MatrixXd r = f * truth.transpose();
            for (Eigen::Index i = 0; i < n; ++i) r.col(i) += std::sqrt(idio(i)) * rng.normal_vector(T);
            const Standardized rs = standardize(r);
            const Eigen::MatrixXd truth_std = rs.scales.cwiseInverse().asDiagonal() * truth;
            const Eigen::MatrixXd node_sums = r * h.rows(h.factor_nodes()).transpose();

            FactorModel fm = FactorModel::initial(h, T);
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, q), common = Eigen::MatrixXd::Zero(n, n);
            int kept = 0;
            for (int s = 0; s < 600; ++s) {
                const FactorDraw fd = sample_factors(rs.values, fm.loadings, fm.cs_precision, rng);
                Eigen::MatrixXd rot = enforce_sign(rotate_factors(fd.factors, fm.blocks), node_sums);
                const LoadingsDraw ld = sample_loadings(rs.values, rot, fm.mask, fm.loading_prior_sd, fm.ts_precision, rng);
                fm.loadings = ld.loadings;
                fm.ts_precision = ld.ts_precision;
                fm.cs_precision = fd.cs_precision;
                if (s >= 200) {
                    const Eigen::MatrixXd sf = block_covariance(rot, fm.blocks);
                    // Express loadings against unit-variance factors.
                    acc += fm.loadings * sf.diagonal().cwiseSqrt().asDiagonal();
                    common += fm.loadings * sf * fm.loadings.transpose();
                    ++kept;
                }
            }
            const Eigen::MatrixXd est = acc / kept;
            CHECK((est.array().abs() * (!mask).cast<double>()).maxCoeff() < 1e-6);
            if (nested) {
                const Eigen::MatrixXd target = truth_std * truth_std.transpose();
                const double rel = (common / kept - target).norm() / target.norm();
                MESSAGE("nested design, common covariance error: " << rel);
                CHECK(rel < 0.2);
            } else {
                const double rel = (est - truth_std).norm() / truth_std.norm();
                MESSAGE("relative Frobenius error of loadings: " << rel);
                CHECK(rel < 0.15);
            }
        }
    }
}
