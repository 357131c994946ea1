#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cohere/evaluation.hpp"
#include "cohere/forecasts.hpp"
#include "cohere/gibbs.hpp"
#include "cohere/hierarchy.hpp"
#include "cohere/io.hpp"
#include "cohere/metrics.hpp"
#include "cohere/panel.hpp"
#include "cohere/random.hpp"
#include "cohere/simulate.hpp"

namespace py = pybind11;
using namespace cohere;

namespace {

std::vector<std::string> month_strings(const std::vector<Month>& months) {
    std::vector<std::string> out;
    for (const auto& m : months) out.push_back(m.str());
    return out;
}

Panel make_panel(const std::vector<std::string>& dates, const std::vector<std::string>& ids,
                 const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(dates.size()) != values.rows() || static_cast<Eigen::Index>(ids.size()) != values.cols())
        throw std::invalid_argument("panel: values must be len(dates) x len(ids)");
    Panel p;
    for (const auto& d : dates) p.dates.push_back(Month::parse(d));
    p.ids = ids;
    p.values = values;
    return p;
}

py::dict panel_dict(const Panel& p) {
    py::dict d;
    d["dates"] = month_strings(p.dates);
    d["ids"] = p.ids;
    d["values"] = p.values;
    return d;
}

GibbsConfig gibbs_config(int warmup, int samples, int thin, int chains, std::uint64_t seed, double discount, int horizon,
                         int seasonal_period, const std::vector<std::string>& factor_levels,
                         const std::vector<std::string>& combination_series) {
    GibbsConfig c;
    c.warmup = warmup;
    c.samples = samples;
    c.thin = thin;
    c.chains = chains;
    c.seed = seed;
    c.discount = discount;
    c.horizon = horizon;
    c.seasonal_period = seasonal_period;
    c.factor_levels = factor_levels;
    c.combination_series = combination_series;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Coherent probabilistic reconciliation of hierarchical forecasts";
    py::register_exception<io::FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<Hierarchy>(m, "Hierarchy")
        .def_static("from_json", [](const std::string& text) { return io::parse_hierarchy(text); }, py::arg("text"))
        .def_static("load", [](const std::filesystem::path& p) { return io::load_hierarchy(p); }, py::arg("path"))
        .def("to_json", [](const Hierarchy& h) { return io::hierarchy_json(h); })
        .def_property_readonly("atomic_ids", &Hierarchy::atomic_ids)
        .def_property_readonly("node_ids",
                               [](const Hierarchy& h) {
                                   std::vector<std::string> ids;
                                   for (const auto& n : h.nodes()) ids.push_back(n.id);
                                   return ids;
                               })
        .def_property_readonly("levels",
                               [](const Hierarchy& h) {
                                   std::vector<std::string> names;
                                   for (const auto& l : h.levels()) names.push_back(l.name);
                                   return names;
                               })
        .def_property_readonly("summing_matrix", [](const Hierarchy& h) { return Eigen::MatrixXd(h.summing_matrix()); })
        .def("__repr__", [](const Hierarchy& h) {
            return "<Hierarchy " + std::to_string(h.node_count()) + " nodes, " + std::to_string(h.atomic_count()) +
                   " atomic>";
        });

    py::class_<ForecastStore>(m, "ForecastStore")
        .def(py::init<std::size_t>(), py::arg("node_count"))
        .def_static("load", [](const std::filesystem::path& p, const Hierarchy& h) { return io::load_base_forecasts(p, h); },
                    py::arg("path"), py::arg("hierarchy"))
        .def("insert",
             [](ForecastStore& s, const std::string& origin, int horizon, std::size_t node, double value) {
                 s.insert(Month::parse(origin), horizon, node, value);
             },
             py::arg("origin"), py::arg("horizon"), py::arg("node"), py::arg("value"))
        .def("get",
             [](const ForecastStore& s, const std::string& origin, int horizon, std::size_t node) {
                 return s.get(Month::parse(origin), horizon, node);
             },
             py::arg("origin"), py::arg("horizon"), py::arg("node"))
        .def("__len__", &ForecastStore::size)
        .def_property_readonly("origins", [](const ForecastStore& s) { return month_strings(s.origins()); })
        .def_property_readonly("max_horizon", &ForecastStore::max_horizon);

    m.def("load_panel",
          [](const std::filesystem::path& p) { return panel_dict(io::load_panel(p)); }, py::arg("path"),
          "Read a panel CSV into a dict with dates, ids and values.");

    m.def(
        "simulate",
        [](std::uint64_t seed, std::size_t atomic, std::size_t groups, Eigen::Index periods, int seasonal_period,
           std::vector<double> rho, double common_share, double level_noise, int horizon) {
            SimOptions o;
            o.seed = seed;
            o.atomic = atomic;
            o.groups = groups;
            o.periods = periods;
            o.seasonal_period = seasonal_period;
            o.rho = std::move(rho);
            o.common_share = common_share;
            o.level_noise = level_noise;
            const SimSpec spec = make_sim_spec(o);
            SimulatedData data = simulate_dataset(spec, horizon);
            py::dict d;
            d["hierarchy"] = spec.hierarchy;
            d["panel"] = panel_dict(data.panel.atomic);
            d["holdout"] = panel_dict(data.holdout);
            d["signal"] = data.panel.signal;
            d["rho"] = spec.rho;
            d["forecasts"] = std::move(data.forecasts);
            return d;
        },
        py::arg("seed") = 1, py::arg("atomic") = 20, py::arg("groups") = 2, py::arg("periods") = 120,
        py::arg("seasonal_period") = 12, py::arg("rho") = std::vector<double>{0.6}, py::arg("common_share") = 0.5,
        py::arg("level_noise") = 0.005, py::arg("horizon") = 12,
        "Simulate a hierarchy, an atomic panel and base forecasts for every origin.");

    m.def(
        "reconcile",
        [](const Hierarchy& h, const std::vector<std::string>& dates, const std::vector<std::string>& ids,
           const Eigen::MatrixXd& values, const ForecastStore& store, int warmup, int samples, int thin, int chains,
           std::uint64_t seed, double discount, int horizon, int seasonal_period,
           const std::vector<std::string>& factor_levels, const std::vector<std::string>& combination_series) {
            const Panel panel = make_panel(dates, ids, values);
            const GibbsConfig cfg = gibbs_config(warmup, samples, thin, chains, seed, discount, horizon, seasonal_period,
                                                 factor_levels, combination_series);
            const BaseForecasts bf = extract_base_forecasts(store, panel.dates, horizon);
            PosteriorSamples ps;
            {
                py::gil_scoped_release release;
                ps = run_reconciliation(cfg, h, panel, bf);
            }
            // draws x horizon x nodes
            const auto D = static_cast<py::ssize_t>(ps.draw_count());
            const auto m = static_cast<py::ssize_t>(ps.node_ids.size());
            py::array_t<double> paths({D, static_cast<py::ssize_t>(ps.horizon), m});
            auto view = paths.mutable_unchecked<3>();
            for (py::ssize_t d = 0; d < D; ++d)
                for (py::ssize_t t = 0; t < ps.horizon; ++t)
                    for (py::ssize_t i = 0; i < m; ++i) view(d, t, i) = ps.paths[static_cast<std::size_t>(d)](t, i);
            py::dict out;
            out["node_ids"] = ps.node_ids;
            out["paths"] = paths;
            out["mean"] = ps.mean_path();
            out["rho"] = ps.rho;
            out["rho0"] = ps.rho0;
            out["weights"] = ps.weights;
            out["weight_levels"] = ps.weight_levels;
            out["rhat"] = ps.rhat;
            py::dict inv;
            inv["max_coherence_error"] = ps.invariants.max_coherence_error;
            inv["max_weight_sum_error"] = ps.invariants.max_weight_sum_error;
            inv["min_rho"] = ps.invariants.min_rho;
            inv["max_rho"] = ps.invariants.max_rho;
            inv["min_psd_margin"] = ps.invariants.min_psd_margin;
            out["invariants"] = inv;
            return out;
        },
        py::arg("hierarchy"), py::arg("dates"), py::arg("ids"), py::arg("values"), py::arg("forecasts"),
        py::arg("warmup") = 1000, py::arg("samples") = 2000, py::arg("thin") = 2, py::arg("chains") = 1,
        py::arg("seed") = 1, py::arg("discount") = 0.995, py::arg("horizon") = 12, py::arg("seasonal_period") = 12,
        py::arg("factor_levels") = std::vector<std::string>{}, py::arg("combination_series") = std::vector<std::string>{},
        "Run the Gibbs sampler and return coherent posterior forecast paths.");

    m.def(
        "evaluate",
        [](const Hierarchy& h, const std::vector<std::string>& dates, const std::vector<std::string>& ids,
           const Eigen::MatrixXd& values, const ForecastStore& store, const std::vector<std::string>& methods, int window,
           int horizon, int max_origins, const std::string& split_level, int warmup, int samples, int thin,
           std::uint64_t seed) {
            EvaluationConfig cfg;
            cfg.methods.clear();
            for (const auto& name : methods) cfg.methods.push_back(parse_method(name));
            cfg.window = window;
            cfg.horizon = horizon;
            cfg.max_origins = max_origins;
            cfg.split_level = split_level;
            cfg.gibbs = gibbs_config(warmup, samples, thin, 1, seed, 0.995, horizon, 12, {}, {});
            const Panel panel = make_panel(dates, ids, values);
            MetricReport rep;
            {
                py::gil_scoped_release release;
                rep = rolling_evaluate(cfg, h, panel, store);
            }
            py::list rows;
            for (const auto& r : rep.rows) {
                py::dict d;
                d["method"] = r.method;
                d["level"] = r.level;
                d["purpose_split"] = r.purpose_split;
                d["horizon"] = r.horizon;
                d["metric"] = r.metric;
                d["value"] = r.value;
                rows.append(d);
            }
            py::list scores;
            for (const auto& s : rep.origin_scores) {
                py::dict d;
                d["method"] = s.method;
                d["origin"] = s.origin.str();
                d["energy"] = s.energy;
                scores.append(d);
            }
            py::dict out;
            out["metrics"] = rows;
            out["origin_scores"] = scores;
            return out;
        },
        py::arg("hierarchy"), py::arg("dates"), py::arg("ids"), py::arg("values"), py::arg("forecasts"),
        py::arg("methods") = std::vector<std::string>{"base", "ols", "he"}, py::arg("window") = 96,
        py::arg("horizon") = 12, py::arg("max_origins") = 0, py::arg("split_level") = "", py::arg("warmup") = 1000,
        py::arg("samples") = 2000, py::arg("thin") = 2, py::arg("seed") = 1,
        "Rolling-origin evaluation of BASE, OLS and HE forecasts.");

    m.def("ols_reconcile", &ols_reconcile, py::arg("base"), py::arg("summing_matrix"));
    m.def("oos_r2", &oos_r2, py::arg("forecast"), py::arg("actual"), py::arg("benchmark"));
    m.def(
        "energy_score",
        [](const Eigen::MatrixXd& samples, const Eigen::VectorXd& y, std::uint64_t seed, const std::string& mode) {
            EnergyMode em = EnergyMode::Automatic;
            if (mode == "exact") em = EnergyMode::Exact;
            else if (mode == "resampled") em = EnergyMode::Resampled;
            else if (mode != "auto") throw std::invalid_argument("mode must be auto, exact or resampled");
            Rng rng(seed);
            return energy_score(samples, y, rng, em);
        },
        py::arg("samples"), py::arg("realization"), py::arg("seed") = 1, py::arg("mode") = "auto");
}
