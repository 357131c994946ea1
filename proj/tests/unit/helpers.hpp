#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cohere/hierarchy.hpp"
#include "cohere/random.hpp"

namespace testing {

// {Total, A, B}
inline cohere::Hierarchy tiny_hierarchy() {
    cohere::HierarchySpec spec;
    spec.atomic = {"A", "B"};
    spec.levels = {{"Total", {{"A", "Total"}, {"B", "Total"}}}};
    spec.factor_levels = {"Total"};
    return cohere::Hierarchy::build(spec);
}

// Four atomic series crossed by two row groups and two column groups.
inline cohere::Hierarchy grouped_hierarchy() {
    cohere::HierarchySpec spec;
    spec.atomic = {"a1", "a2", "b1", "b2"};
    spec.levels = {{"Total", {{"a1", "T"}, {"a2", "T"}, {"b1", "T"}, {"b2", "T"}}},
                   {"Row", {{"a1", "a"}, {"a2", "a"}, {"b1", "b"}, {"b2", "b"}}},
                   {"Col", {{"a1", "x1"}, {"a2", "x2"}, {"b1", "x1"}, {"b2", "x2"}}}};
    spec.factor_levels = {"Total", "Row"};
    return cohere::Hierarchy::build(spec);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace testing
