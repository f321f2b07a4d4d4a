#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hnr/common.hpp"
#include "hnr/head_tail.hpp"

namespace hnr {

struct EdgeRecord {
    std::string source;
    std::string target;
    double weight = 0.0;
};

struct Edge {
    std::uint32_t source = 0;
    std::uint32_t target = 0;
    double weight = 0.0;
};

/// Column-stochastic transition matrix in compressed-column form.
/// Entry (u, v) is the probability of moving v -> u. Columns whose source
/// has no out-weight are implicitly the uniform column 1/N.
class Transition {
public:
    Transition() = default;

    /// columns[v] holds (target, weight) pairs with weight > 0; each column
    /// is normalized by its own sum. An empty column is marked dangling.
    static Transition from_weighted_columns(
        std::size_t n, const std::vector<std::vector<std::pair<std::uint32_t, double>>>& columns) {
        Transition t;
        t.n_ = n;
        t.col_ptr_.assign(n + 1, 0);
        t.dangling_.assign(n, false);
        std::size_t nnz = 0;
        for (std::size_t v = 0; v < n; ++v) nnz += columns[v].size();
        t.row_.reserve(nnz);
        t.prob_.reserve(nnz);
        for (std::size_t v = 0; v < n; ++v) {
            double sum = 0.0;
            for (const auto& [u, w] : columns[v]) sum += w;
            if (sum <= 0.0) {
                t.dangling_[v] = true;
            } else {
                for (const auto& [u, w] : columns[v]) {
                    t.row_.push_back(u);
                    t.prob_.push_back(w / sum);
                }
            }
            t.col_ptr_[v + 1] = t.row_.size();
        }
        return t;
    }

    std::size_t size() const { return n_; }
    bool dangling(std::size_t v) const { return dangling_[v]; }
    const std::vector<bool>& dangling_columns() const { return dangling_; }

    /// Dense accessor including the uniform dangling fix.
    double entry(std::size_t target, std::size_t source) const {
        if (dangling_[source]) return 1.0 / static_cast<double>(n_);
        for (std::size_t k = col_ptr_[source]; k < col_ptr_[source + 1]; ++k) {
            if (row_[k] == target) return prob_[k];
        }
        return 0.0;
    }

    /// y = T x
    void multiply(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        double dangling_mass = 0.0;
        for (std::size_t v = 0; v < n_; ++v) {
            if (dangling_[v]) {
                dangling_mass += x[v];
                continue;
            }
            const double xv = x[v];
            for (std::size_t k = col_ptr_[v]; k < col_ptr_[v + 1]; ++k) {
                y[row_[k]] += prob_[k] * xv;
            }
        }
        if (dangling_mass != 0.0) {
            const double share = dangling_mass / static_cast<double>(n_);
            for (std::size_t u = 0; u < n_; ++u) y[u] += share;
        }
    }

    double column_sum(std::size_t v) const {
        if (dangling_[v]) return 1.0;
        double s = 0.0;
        for (std::size_t k = col_ptr_[v]; k < col_ptr_[v + 1]; ++k) s += prob_[k];
        return s;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> col_ptr_;
    std::vector<std::uint32_t> row_;
    std::vector<double> prob_;
    std::vector<bool> dangling_;
};

/// Weighted directed network with its derived column-standardized transition
/// matrix. Immutable after construction.
class WeightedDigraph {
public:
    static WeightedDigraph from_edges(const std::vector<EdgeRecord>& records) {
        if (records.empty()) {
            throw ValidationError("build_graph: empty edge list");
        }
        WeightedDigraph g;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (r.source.empty() || r.target.empty()) {
                throw ValidationError("build_graph: empty node label in record " +
                                      std::to_string(i + 1));
            }
            if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) {
                throw ValidationError("build_graph: negative or non-finite weight " +
                                      std::to_string(r.weight) + " on edge '" + r.source +
                                      "' -> '" + r.target + "' (record " +
                                      std::to_string(i + 1) + ")");
            }
            g.intern(r.source);
            g.intern(r.target);
        }

        // merge duplicate (source, target) pairs by summing weights
        std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
        for (const auto& r : records) {
            const auto s = g.index_.at(r.source);
            const auto t = g.index_.at(r.target);
            merged[{s, t}] += r.weight;
        }

        const std::size_t n = g.node_ids_.size();
        g.out_adj_.assign(n, {});
        g.in_degree_.assign(n, 0);
        g.out_degree_.assign(n, 0);
        g.in_strength_.assign(n, 0.0);
        g.out_strength_.assign(n, 0.0);
        g.edges_.reserve(merged.size());
        for (const auto& [key, w] : merged) {
            const auto [s, t] = key;
            g.edges_.push_back({s, t, w});
            g.out_adj_[s].emplace_back(t, w);
            g.out_degree_[s] += 1;
            g.in_degree_[t] += 1;
            g.out_strength_[s] += w;
            g.in_strength_[t] += w;
        }
        g.transition_ = Transition::from_weighted_columns(n, g.out_adj_);
        return g;
    }

    std::size_t node_count() const { return node_ids_.size(); }
    const std::vector<std::string>& node_ids() const { return node_ids_; }

    bool has_node(std::string_view id) const { return index_.count(std::string(id)) > 0; }
    std::uint32_t index_of(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) {
            throw ValidationError("unknown node_id '" + std::string(id) + "'");
        }
        return it->second;
    }

    const std::vector<Edge>& edges() const { return edges_; }
    const Transition& transition() const { return transition_; }

    /// (target, merged weight) pairs, ordered by target index.
    const std::vector<std::pair<std::uint32_t, double>>& out_edges(std::size_t v) const {
        return out_adj_[v];
    }

    int in_degree(std::size_t v) const { return in_degree_[v]; }
    int out_degree(std::size_t v) const { return out_degree_[v]; }
    double in_strength(std::size_t v) const { return in_strength_[v]; }
    double out_strength(std::size_t v) const { return out_strength_[v]; }
    const std::vector<double>& in_strengths() const { return in_strength_; }

private:
    void intern(const std::string& id) {
        if (index_.emplace(id, static_cast<std::uint32_t>(node_ids_.size())).second) {
            node_ids_.push_back(id);
        }
    }

    std::vector<std::string> node_ids_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> out_adj_;
    std::vector<int> in_degree_, out_degree_;
    std::vector<double> in_strength_, out_strength_;
    Transition transition_;
};

inline WeightedDigraph build_graph(const std::vector<EdgeRecord>& records) {
    return WeightedDigraph::from_edges(records);
}

/// Per-node standardized attribute vectors, row-major, all entries in [0,1].
class AttributeMatrix {
public:
    AttributeMatrix() = default;
    AttributeMatrix(std::size_t rows, std::vector<std::string> names, std::vector<double> values)
        : rows_(rows), names_(std::move(names)), values_(std::move(values)) {
        if (values_.size() != rows_ * names_.size()) {
            throw ValidationError("AttributeMatrix: value count does not match dimensions");
        }
    }

    static AttributeMatrix empty(std::size_t rows) { return AttributeMatrix(rows, {}, {}); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::vector<double> values_;
};

/// Per-column min-max scaling to [0,1]; constant columns map to 0.5.
inline AttributeMatrix standardize_attributes(const std::vector<std::vector<double>>& raw,
                                              std::vector<std::string> names = {}) {
    const std::size_t n = raw.size();
    const std::size_t m = n == 0 ? 0 : raw.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        if (raw[i].size() != m) {
            throw ValidationError("standardize_attributes: ragged row " + std::to_string(i));
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(raw[i][j])) {
                throw ValidationError("standardize_attributes: non-finite value at row " +
                                      std::to_string(i) + ", column " + std::to_string(j));
            }
        }
    }
    if (names.empty()) {
        for (std::size_t j = 0; j < m; ++j) names.push_back("attr_" + std::to_string(j + 1));
    }
    if (names.size() != m) {
        throw ValidationError("standardize_attributes: name count does not match columns");
    }

    std::vector<double> values(n * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double lo = raw[0][j], hi = raw[0][j];
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, raw[i][j]);
            hi = std::max(hi, raw[i][j]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            values[i * m + j] = (hi > lo) ? (raw[i][j] - lo) / (hi - lo) : 0.5;
        }
    }
    return AttributeMatrix(n, std::move(names), std::move(values));
}

/// Total map node index -> group id in 0..K-1; every group id is used.
struct GroupAssignment {
    std::vector<std::uint32_t> group_of;
    std::uint32_t group_count = 0;

    static GroupAssignment single_group(std::size_t n) {
        GroupAssignment g;
        g.group_of.assign(n, 0);
        g.group_count = n > 0 ? 1 : 0;
        return g;
    }

    void validate(std::size_t n) const {
        if (group_of.size() != n) {
            throw ValidationError("GroupAssignment: does not cover all nodes");
        }
        if (group_count == 0) throw ValidationError("GroupAssignment: no groups");
        std::vector<bool> used(group_count, false);
        for (auto g : group_of) {
            if (g >= group_count) {
                throw ValidationError("GroupAssignment: group id out of range");
            }
            used[g] = true;
        }
        for (std::size_t k = 0; k < group_count; ++k) {
            if (!used[k]) {
                throw ValidationError("GroupAssignment: group " + std::to_string(k) + " unused");
            }
        }
    }
};

/// Head/tail breaks on weighted in-degree. Group 0 is the deepest head,
/// higher ids walk back out towards the level-1 tail; at most max_levels+1
/// groups. Constant in-strength collapses to a single group.
inline GroupAssignment assign_groups_default(const WeightedDigraph& graph, int max_levels) {
    if (max_levels < 1) throw ValidationError("assign_groups_default: max_levels must be >= 1");
    const std::size_t n = graph.node_count();
    if (n < 2) return GroupAssignment::single_group(n);

    const HtPartition part = head_tail_breaks(graph.in_strengths(), 0.4, max_levels);
    const int depth = part.depth();
    GroupAssignment g;
    g.group_of.assign(n, 0);
    if (depth == 0) {
        g.group_count = 1;
        return g;
    }
    g.group_count = static_cast<std::uint32_t>(depth + 1);
    for (const auto& lvl : part.levels) {
        const auto tail_group = static_cast<std::uint32_t>(depth - lvl.level + 1);
        for (std::size_t i : lvl.tail) g.group_of[i] = tail_group;
    }
    for (std::size_t i : part.levels.back().head) g.group_of[i] = 0;
    return g;
}

/// Observed influence indicator for a subset of nodes (ground truth y).
struct LabelSet {
    std::vector<std::pair<std::size_t, double>> entries;  // sorted by node index

    static LabelSet from_pairs(std::vector<std::pair<std::size_t, double>> pairs,
                               std::size_t node_count) {
        std::sort(pairs.begin(), pairs.end());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].first >= node_count) {
                throw ValidationError("LabelSet: node index out of range");
            }
            if (!std::isfinite(pairs[i].second)) {
                throw ValidationError("LabelSet: non-finite label value");
            }
            if (i > 0 && pairs[i].first == pairs[i - 1].first) {
                throw ValidationError("LabelSet: duplicate node " +
                                      std::to_string(pairs[i].first));
            }
        }
        LabelSet s;
        s.entries = std::move(pairs);
        return s;
    }

    std::size_t size() const { return entries.size(); }
};

}  // namespace hnr
