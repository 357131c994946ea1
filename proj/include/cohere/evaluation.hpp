#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cohere/forecasts.hpp"
#include "cohere/gibbs.hpp"
#include "cohere/panel.hpp"

namespace cohere {

class Hierarchy;

enum class Method { Base, Ols, He };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct EvaluationConfig {
    std::vector<Method> methods{Method::Base, Method::Ols, Method::He};
    int window = 96;
    int horizon = 12;
    int max_origins = 0;      // 0 = every available origin, else the earliest ones
    std::string split_level;  // level whose labels split the nested levels' R² rows
    GibbsConfig gibbs;        // horizon is overridden per origin
};

struct MetricRow {
    std::string method;
    std::string level;  // level name, or "all" for the whole hierarchy
    std::string purpose_split;
    std::string horizon;  // "1".."H" or a band such as "1-6"
    std::string metric;   // "r2_pct" or "energy"
    double value = 0.0;
};

struct OriginScore {
    std::string method;
    Month origin;
    double energy = 0.0;  // whole-hierarchy energy score averaged over the scored horizons
};

struct MetricReport {
    std::vector<MetricRow> rows;
    std::vector<OriginScore> origin_scores;
    std::vector<Month> origins;
    std::vector<double> reconcile_seconds;  // wall-clock of each origin's sampler run

    std::optional<double> find(const std::string& method, const std::string& level, const std::string& horizon,
                               const std::string& metric, const std::string& split = "all") const;
};

/// Rolling-origin evaluation. Origins run from the end of the first window
/// to the second-to-last period; horizons past the panel end are not scored.
/// Requires periods >= window + horizon.
MetricReport rolling_evaluate(const EvaluationConfig& config, const Hierarchy& hierarchy, const Panel& atomic_panel,
                              const ForecastStore& store);

}  // namespace cohere
