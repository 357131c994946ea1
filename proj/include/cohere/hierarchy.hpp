#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cohere/panel.hpp"

namespace cohere {

/// Grouping description: one label per atomic series for every level.
struct HierarchySpec {
    struct Level {
        std::string name;
        std::map<std::string, std::string> labels;  // atomic id -> node label
    };
    std::vector<std::string> atomic;
    std::vector<Level> levels;
    std::vector<std::string> factor_levels;
};

struct HierarchyNode {
    std::string id;
    std::size_t level = 0;
    std::vector<std::size_t> atomic;  // ascending atomic indices
};

struct HierarchyLevel {
    std::string name;
    std::vector<std::size_t> nodes;  // node indices, in node order
};

/// Dense m x n 0/1 matrix; aggregate rows first, identity block last.
using SummingMatrix = Eigen::MatrixXd;

/// Group/level structure over n atomic series. Immutable once built.
///
/// Nodes are ordered level-major (levels in spec order, labels sorted
/// lexicographically within a level); the atomic level is always last and keeps
/// the atomic order of the spec, so the bottom n x n block of S is the identity.
class Hierarchy {
public:
    static Hierarchy build(const HierarchySpec& spec);

    std::size_t atomic_count() const { return atomic_ids_.size(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t aggregate_count() const { return nodes_.size() - atomic_ids_.size(); }
    std::size_t level_count() const { return levels_.size(); }
    std::size_t atomic_level() const { return levels_.size() - 1; }

    const std::vector<std::string>& atomic_ids() const { return atomic_ids_; }
    const std::vector<HierarchyNode>& nodes() const { return nodes_; }
    const std::vector<HierarchyLevel>& levels() const { return levels_; }
    const std::vector<std::size_t>& factor_levels() const { return factor_levels_; }

    std::optional<std::size_t> node_index(const std::string& id) const;
    std::optional<std::size_t> level_index(const std::string& name) const;

    /// Node indices of every factor level, concatenated in factor-level order.
    std::vector<std::size_t> factor_nodes() const;
    /// Size of each factor level's block, matching factor_nodes().
    std::vector<std::size_t> factor_block_sizes() const;

    /// Copy with a different factor-level designation (names must exist).
    Hierarchy with_factor_levels(const std::vector<std::string>& names) const;

    const SummingMatrix& summing_matrix() const { return s_; }
    /// Rows of S for the given node indices.
    Eigen::MatrixXd rows(const std::vector<std::size_t>& node_indices) const;

    const HierarchySpec& spec() const { return spec_; }

private:
    HierarchySpec spec_;
    std::vector<std::string> atomic_ids_;
    std::vector<HierarchyNode> nodes_;
    std::vector<HierarchyLevel> levels_;
    std::vector<std::size_t> factor_levels_;
    std::map<std::string, std::size_t> node_lookup_;
    SummingMatrix s_;
};

Hierarchy build_hierarchy(const HierarchySpec& spec);

SummingMatrix summing_matrix(const Hierarchy& h);

/// y_t = S b_t for every row. A node is missing at t when any of its atomic
/// descendants is missing.
Panel aggregate(const Hierarchy& h, const Panel& atomic_panel);

/// Rows of S belonging to level j (m_j x n).
Eigen::MatrixXd level_selector(const Hierarchy& h, std::size_t level_index);

}  // namespace cohere
