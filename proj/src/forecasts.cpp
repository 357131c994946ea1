#include "cohere/forecasts.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace cohere {

void ForecastStore::insert(Month origin, int horizon, std::size_t node, double value) {
    if (horizon < 1) throw std::invalid_argument("forecast store: horizon must be >= 1");
    if (node >= node_count_) throw std::invalid_argument("forecast store: node index out of range");
    if (!std::isfinite(value)) throw std::invalid_argument("forecast store: non-finite forecast value");
    const auto [it, inserted] = values_.emplace(Key{origin.ordinal(), horizon, node}, value);
    (void)it;
    if (!inserted)
        throw std::invalid_argument("forecast store: duplicate entry for origin " + origin.str() + ", horizon " +
                                    std::to_string(horizon));
}

std::optional<double> ForecastStore::get(Month origin, int horizon, std::size_t node) const {
    const auto it = values_.find(Key{origin.ordinal(), horizon, node});
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::size_t ForecastStore::group_count() const {
    std::set<std::pair<int, int>> groups;
    for (const auto& [key, v] : values_) groups.emplace(std::get<0>(key), std::get<1>(key));
    return groups.size();
}

std::vector<Month> ForecastStore::origins() const {
    std::set<int> ords;
    for (const auto& [key, v] : values_) ords.insert(std::get<0>(key));
    std::vector<Month> out;
    for (int o : ords) out.push_back(Month::from_ordinal(o));
    return out;
}

int ForecastStore::max_horizon() const {
    int h = 0;
    for (const auto& [key, v] : values_) h = std::max(h, std::get<1>(key));
    return h;
}

BaseForecasts extract_base_forecasts(const ForecastStore& store, const std::vector<Month>& dates, int horizon) {
    if (dates.empty()) throw std::invalid_argument("extract_base_forecasts: empty window");
    if (horizon < 1) throw std::invalid_argument("extract_base_forecasts: horizon must be >= 1");
    const auto T = static_cast<Eigen::Index>(dates.size());
    const auto m = static_cast<Eigen::Index>(store.node_count());
    BaseForecasts out{Eigen::MatrixXd::Constant(T, m, kMissing), Eigen::MatrixXd::Constant(horizon, m, kMissing)};
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index i = 0; i < m; ++i)
            if (auto v = store.get(dates[static_cast<std::size_t>(t)] - 1, 1, static_cast<std::size_t>(i))) out.fitted(t, i) = *v;
    for (int h = 1; h <= horizon; ++h)
        for (Eigen::Index i = 0; i < m; ++i)
            if (auto v = store.get(dates.back(), h, static_cast<std::size_t>(i))) out.forecasts(h - 1, i) = *v;
    return out;
}

}  // namespace cohere
