#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "cohere/panel.hpp"

namespace cohere {

class Hierarchy;

/// Externally produced base forecasts keyed by (origin, horizon, node).
/// Any subset of nodes may be present.
class ForecastStore {
public:
    using Key = std::tuple<int, int, std::size_t>;  // origin ordinal, horizon, node index

    explicit ForecastStore(std::size_t node_count = 0) : node_count_(node_count) {}

    /// Throws std::invalid_argument on a duplicate key, a horizon < 1, an
    /// out-of-range node or a non-finite value.
    void insert(Month origin, int horizon, std::size_t node, double value);
    std::optional<double> get(Month origin, int horizon, std::size_t node) const;

    std::size_t size() const { return values_.size(); }
    std::size_t node_count() const { return node_count_; }
    /// Number of distinct (origin, horizon) pairs.
    std::size_t group_count() const;
    std::vector<Month> origins() const;
    int max_horizon() const;
    const std::map<Key, double>& entries() const { return values_; }

private:
    std::size_t node_count_;
    std::map<Key, double> values_;
};

/// Base forecasts aligned with one estimation window. Missing entries are NaN.
struct BaseForecasts {
    Eigen::MatrixXd fitted;     // T x m, one-step forecast of period t made at t - 1
    Eigen::MatrixXd forecasts;  // H x m, forecasts made at the window's last period
};

/// fitted(t, i) is the (dates[t] - 1, 1, i) entry; forecasts(h - 1, i) is the
/// (dates.back(), h, i) entry.
BaseForecasts extract_base_forecasts(const ForecastStore& store, const std::vector<Month>& dates, int horizon);

}  // namespace cohere
