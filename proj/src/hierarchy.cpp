#include "cohere/hierarchy.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace cohere {

namespace {

bool is_identity_level(const HierarchySpec::Level& level, const std::vector<std::string>& atomic) {
    for (const auto& id : atomic) {
        auto it = level.labels.find(id);
        if (it == level.labels.end() || it->second != id) return false;
    }
    return true;
}

}  // namespace

Hierarchy Hierarchy::build(const HierarchySpec& spec) {
    if (spec.atomic.empty()) throw std::invalid_argument("hierarchy: no atomic series");

    Hierarchy h;
    h.spec_ = spec;
    h.atomic_ids_ = spec.atomic;

    std::map<std::string, std::size_t> atomic_pos;
    for (std::size_t i = 0; i < spec.atomic.size(); ++i) {
        if (spec.atomic[i].empty()) throw std::invalid_argument("hierarchy: empty atomic id");
        if (!atomic_pos.emplace(spec.atomic[i], i).second)
            throw std::invalid_argument("hierarchy: duplicate atomic id '" + spec.atomic[i] + "'");
    }

    std::string atomic_name = "atomic";
    std::set<std::string> level_names;
    for (const auto& level : spec.levels) {
        if (level.name.empty()) throw std::invalid_argument("hierarchy: level without a name");
        if (!level_names.insert(level.name).second)
            throw std::invalid_argument("hierarchy: duplicate level name '" + level.name + "'");
        for (const auto& [id, label] : level.labels) {
            if (!atomic_pos.count(id))
                throw std::invalid_argument("hierarchy: level '" + level.name + "' labels unknown series '" + id + "'");
            if (label.empty())
                throw std::invalid_argument("hierarchy: empty label for '" + id + "' in level '" + level.name + "'");
        }
        for (const auto& id : spec.atomic)
            if (!level.labels.count(id))
                throw std::invalid_argument("hierarchy: series '" + id + "' has no label for level '" + level.name + "'");

        if (is_identity_level(level, spec.atomic)) {
            atomic_name = level.name;
            continue;
        }

        std::map<std::string, std::vector<std::size_t>> groups;
        for (const auto& id : spec.atomic) groups[level.labels.at(id)].push_back(atomic_pos.at(id));

        HierarchyLevel out{level.name, {}};
        for (auto& [label, members] : groups) {
            std::sort(members.begin(), members.end());
            out.nodes.push_back(h.nodes_.size());
            h.nodes_.push_back({label, h.levels_.size(), std::move(members)});
        }
        h.levels_.push_back(std::move(out));
    }

    HierarchyLevel bottom{atomic_name, {}};
    for (std::size_t i = 0; i < spec.atomic.size(); ++i) {
        bottom.nodes.push_back(h.nodes_.size());
        h.nodes_.push_back({spec.atomic[i], h.levels_.size(), {i}});
    }
    h.levels_.push_back(std::move(bottom));

    for (std::size_t k = 0; k < h.nodes_.size(); ++k)
        if (!h.node_lookup_.emplace(h.nodes_[k].id, k).second)
            throw std::invalid_argument("hierarchy: node id '" + h.nodes_[k].id + "' appears in more than one level");

    const auto m = static_cast<Eigen::Index>(h.nodes_.size());
    const auto n = static_cast<Eigen::Index>(spec.atomic.size());
    h.s_ = SummingMatrix::Zero(m, n);
    for (Eigen::Index k = 0; k < m; ++k)
        for (auto a : h.nodes_[static_cast<std::size_t>(k)].atomic) h.s_(k, static_cast<Eigen::Index>(a)) = 1.0;

    for (const auto& name : spec.factor_levels) {
        auto idx = h.level_index(name);
        if (!idx) throw std::invalid_argument("hierarchy: unknown factor level '" + name + "'");
        if (std::find(h.factor_levels_.begin(), h.factor_levels_.end(), *idx) != h.factor_levels_.end())
            throw std::invalid_argument("hierarchy: factor level '" + name + "' listed twice");
        h.factor_levels_.push_back(*idx);
    }
    return h;
}

std::optional<std::size_t> Hierarchy::node_index(const std::string& id) const {
    auto it = node_lookup_.find(id);
    if (it == node_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Hierarchy::level_index(const std::string& name) const {
    for (std::size_t j = 0; j < levels_.size(); ++j)
        if (levels_[j].name == name) return j;
    return std::nullopt;
}

std::vector<std::size_t> Hierarchy::factor_nodes() const {
    std::vector<std::size_t> out;
    for (auto j : factor_levels_) out.insert(out.end(), levels_[j].nodes.begin(), levels_[j].nodes.end());
    return out;
}

std::vector<std::size_t> Hierarchy::factor_block_sizes() const {
    std::vector<std::size_t> out;
    for (auto j : factor_levels_) out.push_back(levels_[j].nodes.size());
    return out;
}

Hierarchy Hierarchy::with_factor_levels(const std::vector<std::string>& names) const {
    HierarchySpec spec = spec_;
    spec.factor_levels = names;
    return build(spec);
}

Eigen::MatrixXd Hierarchy::rows(const std::vector<std::size_t>& node_indices) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(node_indices.size()), s_.cols());
    for (std::size_t r = 0; r < node_indices.size(); ++r) {
        if (node_indices[r] >= nodes_.size()) throw std::out_of_range("hierarchy: node index out of range");
        out.row(static_cast<Eigen::Index>(r)) = s_.row(static_cast<Eigen::Index>(node_indices[r]));
    }
    return out;
}

Hierarchy build_hierarchy(const HierarchySpec& spec) { return Hierarchy::build(spec); }

SummingMatrix summing_matrix(const Hierarchy& h) { return h.summing_matrix(); }

Panel aggregate(const Hierarchy& h, const Panel& atomic_panel) {
    const auto n = static_cast<Eigen::Index>(h.atomic_count());
    if (atomic_panel.series() != n)
        throw std::invalid_argument("aggregate: panel has " + std::to_string(atomic_panel.series()) +
                                    " columns, hierarchy has " + std::to_string(n) + " atomic series");
    Panel out;
    out.dates = atomic_panel.dates;
    for (const auto& node : h.nodes()) out.ids.push_back(node.id);
    const Eigen::Index T = atomic_panel.periods();
    out.values.resize(T, static_cast<Eigen::Index>(h.node_count()));
    for (std::size_t k = 0; k < h.node_count(); ++k) {
        const auto& members = h.nodes()[k].atomic;
        for (Eigen::Index t = 0; t < T; ++t) {
            double sum = 0.0;
            for (auto a : members) sum += atomic_panel.values(t, static_cast<Eigen::Index>(a));
            out.values(t, static_cast<Eigen::Index>(k)) = sum;  // NaN propagates
        }
    }
    return out;
}

Eigen::MatrixXd level_selector(const Hierarchy& h, std::size_t level_index) {
    if (level_index >= h.level_count()) throw std::out_of_range("level_selector: level index out of range");
    return h.rows(h.levels()[level_index].nodes);
}

}  // namespace cohere
