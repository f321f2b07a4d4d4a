#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hnr/common.hpp"
#include "hnr/graph.hpp"
#include "hnr/rng.hpp"

namespace hnr {

/// Probability distribution used for the non-link portion of the recursion.
struct TeleportVector {
    std::vector<double> probabilities;

    static TeleportVector uniform(std::size_t n) {
        TeleportVector t;
        t.probabilities.assign(n, 1.0 / static_cast<double>(n));
        return t;
    }

    void validate() const {
        double sum = 0.0;
        for (double p : probabilities) {
            if (!(p >= 0.0)) throw ValidationError("TeleportVector: negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError("TeleportVector: entries sum to " + std::to_string(sum));
        }
    }
};

inline constexpr double kMaxDamping = 0.99;

/// Group-local damping d(k) and attribute-weight vectors a(k).
struct HnrParams {
    std::vector<double> damping;                    // per group, [0, 0.99]
    std::vector<std::vector<double>> attr_weights;  // per group, length m, [0,1]

    std::size_t group_count() const { return damping.size(); }
    std::size_t attr_count() const { return attr_weights.empty() ? 0 : attr_weights.front().size(); }

    void validate(std::size_t groups, std::size_t attrs) const {
        if (damping.size() != groups || attr_weights.size() != groups) {
            throw ValidationError("HnrParams: group count mismatch");
        }
        for (double d : damping) {
            if (!(d >= 0.0 && d <= kMaxDamping)) {
                throw ValidationError("HnrParams: damping " + std::to_string(d) +
                                      " outside [0, 0.99]");
            }
        }
        for (const auto& a : attr_weights) {
            if (a.size() != attrs) {
                throw ValidationError("HnrParams: attribute weight length mismatch");
            }
            for (double w : a) {
                if (!(w >= 0.0 && w <= 1.0)) {
                    throw ValidationError("HnrParams: attribute weight outside [0,1]");
                }
            }
        }
    }
};

/// Converged influence scores with derived ordinal ranks (1 = highest,
/// ties broken by node index).
struct RankVector {
    std::vector<double> scores;
    std::vector<std::uint32_t> ranks;
    int iterations = 0;
    double residual = 0.0;
};

inline std::vector<std::uint32_t> ordinal_ranks(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::uint32_t> ranks(scores.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        ranks[order[pos]] = static_cast<std::uint32_t>(pos + 1);
    }
    return ranks;
}

inline RankVector make_rank_vector(std::vector<double> scores, int iterations, double residual) {
    double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
    if (!(sum > 0.0)) throw ValidationError("rank vector has no mass");
    for (double& s : scores) s /= sum;
    RankVector r;
    r.ranks = ordinal_ranks(scores);
    r.scores = std::move(scores);
    r.iterations = iterations;
    r.residual = residual;
    return r;
}

/// raw(u) = sum_j a(g(u))_j * x_j(u), normalized to a distribution;
/// falls back to uniform when all raw mass is zero.
inline TeleportVector teleport_from_attributes(const AttributeMatrix& attrs,
                                               const GroupAssignment& groups,
                                               const HnrParams& params) {
    const std::size_t n = attrs.rows();
    groups.validate(n);
    params.validate(groups.group_count, attrs.cols());

    TeleportVector t;
    t.probabilities.assign(n, 0.0);
    double total = 0.0;
    const std::size_t m = attrs.cols();
    for (std::size_t u = 0; u < n; ++u) {
        const auto& a = params.attr_weights[groups.group_of[u]];
        double raw = 0.0;
        for (std::size_t j = 0; j < m; ++j) raw += a[j] * attrs(u, j);
        t.probabilities[u] = raw;
        total += raw;
    }
    if (total <= 0.0) return TeleportVector::uniform(n);
    for (double& p : t.probabilities) p /= total;
    return t;
}

/// Power iteration for PR(u) = (1-d(u)) t(u) + d(u) sum_v T[u,v] PR(v),
/// from a uniform start, until the L1 change of an update drops below tol.
/// Output is renormalized to sum 1.
inline RankVector fixed_point_rank(const Transition& transition, const TeleportVector& teleport,
                                   std::span<const double> damping_per_node, double tol = 1e-9,
                                   int max_iter = 1000) {
    const std::size_t n = transition.size();
    if (teleport.probabilities.size() != n || damping_per_node.size() != n) {
        throw ValidationError("fixed_point_rank: dimension mismatch");
    }
    teleport.validate();
    for (double d : damping_per_node) {
        if (!(d >= 0.0 && d <= kMaxDamping)) {
            throw ValidationError("fixed_point_rank: damping outside [0, 0.99]");
        }
    }
    if (!(tol > 0.0) || max_iter < 1) {
        throw ValidationError("fixed_point_rank: invalid tol or max_iter");
    }

    std::vector<double> x(n, 1.0 / static_cast<double>(n));
    std::vector<double> y(n, 0.0);
    double residual = 0.0;
    for (int iter = 1; iter <= max_iter; ++iter) {
        transition.multiply(x, y);
        residual = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            const double next = (1.0 - damping_per_node[u]) * teleport.probabilities[u] +
                                damping_per_node[u] * y[u];
            residual += std::abs(next - x[u]);
            x[u] = next;
        }
        if (residual < tol) return make_rank_vector(std::move(x), iter, residual);
    }
    double sum = std::accumulate(x.begin(), x.end(), 0.0);
    if (sum > 0.0) {
        for (double& v : x) v /= sum;
    }
    throw ConvergenceError("fixed_point_rank: no convergence after " + std::to_string(max_iter) +
                               " iterations (residual " + std::to_string(residual) + ")",
                           std::move(x), residual, max_iter);
}

inline RankVector pagerank(const WeightedDigraph& graph, double d = 0.85, double tol = 1e-9,
                           int max_iter = 1000) {
    if (!(d >= 0.0 && d <= kMaxDamping)) {
        throw ValidationError("pagerank: damping outside [0, 0.99]");
    }
    const std::size_t n = graph.node_count();
    std::vector<double> damping(n, d);
    return fixed_point_rank(graph.transition(), TeleportVector::uniform(n), damping, tol, max_iter);
}

/// Column v of the WPR transition weights out-neighbor u by
/// (I_u / sum I) * (O_u / sum O) over F_v, normalized; degenerate columns
/// fall back to a uniform split over F_v. Degrees are unweighted counts.
inline Transition wpr_transition(const WeightedDigraph& graph) {
    const std::size_t n = graph.node_count();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> columns(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& out = graph.out_edges(v);
        if (out.empty()) continue;  // dangling, handled by Transition
        double in_sum = 0.0, out_sum = 0.0;
        for (const auto& [u, w] : out) {
            in_sum += graph.in_degree(u);
            out_sum += graph.out_degree(u);
        }
        double raw_total = 0.0;
        std::vector<std::pair<std::uint32_t, double>> col;
        col.reserve(out.size());
        for (const auto& [u, w] : out) {
            double raw = 0.0;
            if (in_sum > 0.0 && out_sum > 0.0) {
                raw = (graph.in_degree(u) / in_sum) * (graph.out_degree(u) / out_sum);
            }
            col.emplace_back(u, raw);
            raw_total += raw;
        }
        if (raw_total <= 0.0) {
            for (auto& [u, w] : col) w = 1.0;  // uniform split over F_v
        }
        columns[v] = std::move(col);
    }
    return Transition::from_weighted_columns(n, columns);
}

inline RankVector weighted_pagerank(const WeightedDigraph& graph, double d = 0.85,
                                    double tol = 1e-9, int max_iter = 1000) {
    if (!(d >= 0.0 && d <= kMaxDamping)) {
        throw ValidationError("weighted_pagerank: damping outside [0, 0.99]");
    }
    const std::size_t n = graph.node_count();
    std::vector<double> damping(n, d);
    return fixed_point_rank(wpr_transition(graph), TeleportVector::uniform(n), damping, tol,
                            max_iter);
}

/// Structural transition of Eq-8 form: 1/out_degree over out-edges,
/// uniform column when the source has none. Edge weights are ignored.
inline Transition structural_transition(const WeightedDigraph& graph) {
    const std::size_t n = graph.node_count();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> columns(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& [u, w] : graph.out_edges(v)) columns[v].emplace_back(u, 1.0);
    }
    return Transition::from_weighted_columns(n, columns);
}

inline std::vector<double> beta_damping_draws(int count, std::uint64_t seed) {
    if (count < 1) throw ValidationError("attrirank: damping_samples must be >= 1");
    Rng rng(derive_seed(seed, 0xA77121ULL));
    std::vector<double> draws(count);
    for (auto& d : draws) d = rng.beta23();
    return draws;
}

/// One solve per damping value d: PR = (1-d) Q PR + d P PR where Q is the
/// column-normalized RBF attribute-similarity matrix and P the structural
/// transition; scores are the mean of the sampled solutions.
inline RankVector attrirank_fixed(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                  double gamma, std::span<const double> damping_values,
                                  double tol = 1e-9, int max_iter = 1000) {
    const std::size_t n = graph.node_count();
    if (attrs.rows() != n) throw ValidationError("attrirank: attribute row count mismatch");
    if (attrs.cols() == 0) throw ValidationError("attrirank: needs at least one attribute");
    if (!(gamma > 0.0)) throw ValidationError("attrirank: gamma must be positive");
    if (damping_values.empty()) throw ValidationError("attrirank: no damping samples");

    const std::size_t m = attrs.cols();
    // Q column-major: Q[u + n*v] = s_uv / sum_k s_kv
    std::vector<double> q(n * n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        double sum = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            double dist2 = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double diff = attrs(u, j) - attrs(v, j);
                dist2 += diff * diff;
            }
            const double s = std::exp(-gamma * dist2);
            q[u + n * v] = s;
            sum += s;
        }
        for (std::size_t u = 0; u < n; ++u) q[u + n * v] /= sum;
    }
    const Transition p = structural_transition(graph);

    std::vector<double> mean_scores(n, 0.0);
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> x(n), px(n), qx(n);
    for (std::size_t s = 0; s < damping_values.size(); ++s) {
        const double d = damping_values[s];
        if (!(d >= 0.0 && d < 1.0)) {
            throw ValidationError("attrirank: damping sample outside [0,1)");
        }
        std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
        bool converged = false;
        for (int iter = 1; iter <= max_iter; ++iter) {
            p.multiply(x, px);
            std::fill(qx.begin(), qx.end(), 0.0);
            for (std::size_t v = 0; v < n; ++v) {
                const double xv = x[v];
                const double* col = &q[n * v];
                for (std::size_t u = 0; u < n; ++u) qx[u] += col[u] * xv;
            }
            double change = 0.0;
            for (std::size_t u = 0; u < n; ++u) {
                const double next = (1.0 - d) * qx[u] + d * px[u];
                change += std::abs(next - x[u]);
                x[u] = next;
            }
            if (change < tol) {
                converged = true;
                iterations = std::max(iterations, iter);
                residual = std::max(residual, change);
                break;
            }
            residual = change;
        }
        if (!converged) {
            throw ConvergenceError("attrirank: sample " + std::to_string(s) +
                                       " did not converge within " + std::to_string(max_iter) +
                                       " iterations",
                                   x, residual, max_iter);
        }
        const double sum = std::accumulate(x.begin(), x.end(), 0.0);
        for (std::size_t u = 0; u < n; ++u) mean_scores[u] += x[u] / sum;
    }
    for (double& v : mean_scores) v /= static_cast<double>(damping_values.size());
    return make_rank_vector(std::move(mean_scores), iterations, residual);
}

struct AttriRankOptions {
    double gamma = 0.0;  // <= 0 selects the 1/m default
    int damping_samples = 64;
    std::uint64_t seed = 0;
    double tol = 1e-9;
    int max_iter = 1000;
};

inline RankVector attrirank(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                            const AttriRankOptions& opts = {}) {
    if (attrs.cols() == 0) throw ValidationError("attrirank: needs at least one attribute");
    const double gamma = opts.gamma > 0.0 ? opts.gamma : 1.0 / static_cast<double>(attrs.cols());
    const auto draws = beta_damping_draws(opts.damping_samples, opts.seed);
    return attrirank_fixed(graph, attrs, gamma, draws, opts.tol, opts.max_iter);
}

/// Entropy of normalized cluster out-degrees over all ordered 2-transmission
/// sequences from the seed, on the undirected unweighted projection.
inline double expected_force(const WeightedDigraph& graph, std::size_t seed_node) {
    const std::size_t n = graph.node_count();
    if (seed_node >= n) throw ValidationError("expected_force: node index out of range");

    std::vector<std::vector<std::uint32_t>> nbr(n);
    for (const auto& e : graph.edges()) {
        if (e.source == e.target) continue;
        nbr[e.source].push_back(e.target);
        nbr[e.target].push_back(e.source);
    }
    for (auto& list : nbr) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }

    const auto i = static_cast<std::uint32_t>(seed_node);
    std::vector<double> cluster_degrees;
    for (std::uint32_t a : nbr[i]) {
        for (std::uint32_t u : {i, a}) {
            for (std::uint32_t b : nbr[u]) {
                if (b == i || b == a) continue;
                int d = 0;
                for (std::uint32_t c : {i, a, b}) {
                    for (std::uint32_t x : nbr[c]) {
                        if (x != i && x != a && x != b) ++d;
                    }
                }
                cluster_degrees.push_back(static_cast<double>(d));
            }
        }
    }

    if (cluster_degrees.empty()) {
        throw ValidationError("expected_force: insufficient neighborhood around node '" +
                              graph.node_ids()[seed_node] + "'");
    }
    if (cluster_degrees.size() == 1) return 0.0;  // single-outcome entropy
    const double total = std::accumulate(cluster_degrees.begin(), cluster_degrees.end(), 0.0);
    if (total <= 0.0) {
        throw ValidationError("expected_force: insufficient neighborhood around node '" +
                              graph.node_ids()[seed_node] + "' (no outward edges)");
    }
    double entropy = 0.0;
    for (double d : cluster_degrees) {
        if (d > 0.0) {
            const double p = d / total;
            entropy -= p * std::log(p);
        }
    }
    return entropy;
}

/// The combined model: attribute-derived teleportation plus group-local
/// damping, solved by fixed-point iteration.
inline RankVector hnr_rank(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                           const GroupAssignment& groups, const HnrParams& params,
                           double tol = 1e-9, int max_iter = 1000) {
    const std::size_t n = graph.node_count();
    if (attrs.rows() != n) throw ValidationError("hnr_rank: attribute row count mismatch");
    groups.validate(n);
    params.validate(groups.group_count, attrs.cols());

    const TeleportVector teleport = teleport_from_attributes(attrs, groups, params);
    std::vector<double> damping(n);
    for (std::size_t u = 0; u < n; ++u) damping[u] = params.damping[groups.group_of[u]];
    return fixed_point_rank(graph.transition(), teleport, damping, tol, max_iter);
}

}  // namespace hnr
