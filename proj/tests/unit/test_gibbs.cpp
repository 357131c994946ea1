#include <doctest.h>

#include <cmath>

#include "cohere/diagnostics.hpp"
#include "cohere/forecasts.hpp"
#include "cohere/gibbs.hpp"
#include "cohere/random.hpp"
#include "cohere/simulate.hpp"

using namespace cohere;

namespace {

struct Toy {
    SimSpec spec;
    SimulatedData data;
    BaseForecasts base;
};

Toy toy(int horizon = 3) {
    SimOptions o;
    o.atomic = 6;
    o.groups = 2;
    o.periods = 36;
    o.seed = 11;
    Toy t{make_sim_spec(o), {}, {}};
    t.data = simulate_dataset(t.spec, horizon);
    t.base = extract_base_forecasts(t.data.forecasts, t.data.panel.atomic.dates, horizon);
    return t;
}

GibbsConfig short_config() {
    GibbsConfig c;
    c.warmup = 0;
    c.samples = 2;
    c.thin = 1;
    c.horizon = 3;
    c.record_trace = true;
    return c;
}

}  // namespace

TEST_SUITE("gibbs") {
    TEST_CASE("short run yields coherent draws") {
        const Toy t = toy();
        const PosteriorSamples out = run_reconciliation(short_config(), t.spec.hierarchy, t.data.panel.atomic, t.base);
        REQUIRE(out.draw_count() == 2);
        const Eigen::MatrixXd& S = t.spec.hierarchy.summing_matrix();
        const Eigen::Index n = S.cols();
        for (const auto& p : out.paths) {
            CHECK(p.rows() == 3);
            CHECK(p.cols() == S.rows());
            CHECK(p.allFinite());
            const Eigen::MatrixXd atoms = p.rightCols(n);
            CHECK((atoms * S.transpose() - p).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, p.cwiseAbs().maxCoeff()));
        }
        CHECK(out.rho.rows() == 2);
        CHECK(out.weights.rows() == 2);
        for (Eigen::Index i = 0; i < out.weights.rows(); ++i) CHECK(std::abs(out.weights.row(i).sum() - 1.0) < 1e-4);
        CHECK(out.invariants.sweeps == 2);
        CHECK(out.weight_levels.size() == t.spec.hierarchy.level_count());
    }

    TEST_CASE("block order") {
        const Toy t = toy();
        const PosteriorSamples out = run_reconciliation(short_config(), t.spec.hierarchy, t.data.panel.atomic, t.base);
        const std::vector<std::string> sweep{"ts", "fm", "cal", "prop", "comb"};
        REQUIRE(out.trace.size() == 2 * sweep.size());
        for (std::size_t i = 0; i < out.trace.size(); ++i) CHECK(out.trace[i] == sweep[i % sweep.size()]);
    }

    TEST_CASE("determinism and kept count") {
        const Toy t = toy();
        GibbsConfig c = short_config();
        c.warmup = 3;
        c.samples = 7;
        c.thin = 2;
        c.chains = 2;
        CHECK(c.kept_per_chain() == 4);
        const PosteriorSamples a = run_reconciliation(c, t.spec.hierarchy, t.data.panel.atomic, t.base);
        const PosteriorSamples b = run_reconciliation(c, t.spec.hierarchy, t.data.panel.atomic, t.base);
        REQUIRE(a.draw_count() == 8);
        for (std::size_t i = 0; i < a.draw_count(); ++i) CHECK(a.paths[i] == b.paths[i]);
        CHECK(a.rho == b.rho);
        CHECK(a.rhat == b.rhat);
        c.seed = 2;
        const PosteriorSamples d = run_reconciliation(c, t.spec.hierarchy, t.data.panel.atomic, t.base);
        CHECK(!(d.paths[0] == a.paths[0]));
    }

    TEST_CASE("configuration errors") {
        const Toy t = toy();
        GibbsConfig c = short_config();
        c.thin = 0;
        CHECK_THROWS(run_reconciliation(c, t.spec.hierarchy, t.data.panel.atomic, t.base));
        c = short_config();
        c.initial_rho = 1.5;
        CHECK_THROWS(run_reconciliation(c, t.spec.hierarchy, t.data.panel.atomic, t.base));
        c = short_config();
        Panel swapped = t.data.panel.atomic;
        std::swap(swapped.ids[0], swapped.ids[1]);
        CHECK_THROWS(run_reconciliation(c, t.spec.hierarchy, swapped, t.base));
    }

    TEST_CASE("rhat") {
        Rng rng(5);
        std::vector<double> x(1000);
        for (double& v : x) v = rng.normal();
        CHECK(rhat({x, x}) == doctest::Approx(1.0).epsilon(0.01));
        CHECK(std::abs(rhat({x}) - 1.0) < 0.05);

        std::vector<double> y(1000);
        for (double& v : y) v = 10.0 + rng.normal();
        // four half-chains with means near {0, 0, 10, 10}: B/n = 100/3, W = 1
        const double expected = std::sqrt((499.0 / 500.0) + 100.0 / 3.0);
        CHECK(rhat({x, y}) == doctest::Approx(expected).epsilon(0.05));
        CHECK(rhat({x, y}) > 3.0);

        CHECK(rhat({std::vector<double>(10, 2.0), std::vector<double>(10, 2.0)}) == 1.0);
        CHECK_THROWS_AS(rhat({std::vector<double>(10, 2.0), std::vector<double>(10, 3.0)}), std::domain_error);
        CHECK_THROWS(rhat({std::vector<double>(3, 1.0)}));
        CHECK_THROWS(rhat({std::vector<double>(6, 1.0), std::vector<double>(8, 1.0)}));
    }
}
