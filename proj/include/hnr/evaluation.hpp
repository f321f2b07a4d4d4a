#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "hnr/calibration.hpp"
#include "hnr/common.hpp"
#include "hnr/graph.hpp"
#include "hnr/head_tail.hpp"
#include "hnr/rankers.hpp"
#include "hnr/rng.hpp"
#include "hnr/spearman.hpp"

namespace hnr {

/// Two-sided p-value from the t approximation rho * sqrt((n-2)/(1-rho^2)).
inline std::optional<double> spearman_pvalue(double rho, std::size_t n) {
    if (n < 3) return std::nullopt;
    if (std::abs(rho) >= 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = rho * std::sqrt(df / (1.0 - rho * rho));
    const boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

struct HtReportPart {
    int level = 1;
    bool head = false;
    std::size_t n = 0;
    double spearman = 0.0;
};

struct EvaluationReport {
    double overall_spearman = 0.0;
    std::optional<double> p_value;
    std::vector<HtReportPart> per_ht;
    std::size_t n_evaluated = 0;
};

enum class PartitionOn { Labels, Scores };

/// Spearman overall plus per head/tail part at every ht level. Parts with
/// fewer than 3 members (or an undefined correlation) are absent.
inline EvaluationReport ht_level_report(const RankVector& ranking, const LabelSet& labels,
                                        PartitionOn partition_on = PartitionOn::Labels,
                                        double head_fraction_cap = 0.4) {
    if (labels.size() < 3) throw ValidationError("ht_level_report: need at least 3 labeled nodes");
    std::vector<double> predicted, observed;
    predicted.reserve(labels.size());
    observed.reserve(labels.size());
    for (const auto& [node, value] : labels.entries) {
        if (node >= ranking.scores.size()) {
            throw ValidationError("ht_level_report: label node out of range");
        }
        predicted.push_back(ranking.scores[node]);
        observed.push_back(value);
    }

    EvaluationReport report;
    report.n_evaluated = labels.size();
    report.overall_spearman = spearman(predicted, observed);
    report.p_value = spearman_pvalue(report.overall_spearman, labels.size());

    const auto& basis = partition_on == PartitionOn::Labels ? observed : predicted;
    const HtPartition part = head_tail_breaks(basis, head_fraction_cap);
    auto add_part = [&](int level, bool head, const std::vector<std::size_t>& members) {
        if (members.size() < 3) return;
        std::vector<double> yh, y;
        yh.reserve(members.size());
        y.reserve(members.size());
        for (std::size_t i : members) {
            yh.push_back(predicted[i]);
            y.push_back(observed[i]);
        }
        try {
            report.per_ht.push_back({level, head, members.size(), spearman(yh, y)});
        } catch (const ValidationError&) {
            // constant part: correlation undefined, reported as absent
        }
    };
    for (const auto& lvl : part.levels) {
        add_part(lvl.level, true, lvl.head);
        add_part(lvl.level, false, lvl.tail);
    }
    return report;
}

struct CvSummary {
    int repeats = 0;
    double train_fraction = 0.0;
    std::size_t train_size = 0;
    std::vector<double> per_repeat;
    double mean = 0.0;
    double sd = 0.0;
};

struct CvOptions {
    double train_fraction = 0.3;
    int repeats = 10;
    bool stratified = false;
};

inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

/// Seeded train/test index splits over the labeled set. Train size is
/// round-half-up of fraction * |labels|; repeat r draws from its own
/// derived stream so repeats are order-invariant.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> cv_splits(
    const LabelSet& labels, double train_fraction, int repeats, std::uint64_t seed,
    bool stratified = false) {
    const std::size_t count = labels.size();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("cross_validate: train fraction outside (0,1)");
    }
    if (repeats < 1) throw ValidationError("cross_validate: repeats must be >= 1");
    const std::size_t train_size = round_half_up(train_fraction * static_cast<double>(count));
    if (train_size < 3 || count - train_size < 3) {
        throw ValidationError("cross_validate: split too small (train " +
                              std::to_string(train_size) + ", test " +
                              std::to_string(count - train_size) + "); need >= 3 on both sides");
    }

    // optional stratification: shuffle within each ht part of the label
    // values, then interleave parts so every split samples all strata
    std::vector<std::vector<std::size_t>> strata;
    if (stratified) {
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) values[i] = labels.entries[i].second;
        const HtPartition part = head_tail_breaks(values, 0.4);
        for (const auto& lvl : part.levels) {
            if (!lvl.tail.empty()) strata.push_back(lvl.tail);
        }
        if (!part.levels.empty() && !part.levels.back().head.empty()) {
            strata.push_back(part.levels.back().head);
        }
    } else {
        std::vector<std::size_t> all(count);
        std::iota(all.begin(), all.end(), 0);
        strata.push_back(std::move(all));
    }

    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits;
    splits.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
        Rng rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(r)));
        std::vector<std::size_t> pool;
        pool.reserve(count);
        std::vector<std::vector<std::size_t>> shuffled = strata;
        for (auto& s : shuffled) {
            for (std::size_t i = s.size(); i > 1; --i) {
                std::swap(s[i - 1], s[rng.integer(i)]);
            }
        }
        // round-robin across strata keeps every prefix balanced
        for (std::size_t k = 0; !shuffled.empty(); ++k) {
            bool any = false;
            for (const auto& s : shuffled) {
                if (k < s.size()) {
                    pool.push_back(s[k]);
                    any = true;
                }
            }
            if (!any) break;
        }
        std::vector<std::size_t> train(pool.begin(),
                                       pool.begin() + static_cast<std::ptrdiff_t>(train_size));
        std::vector<std::size_t> test(pool.begin() + static_cast<std::ptrdiff_t>(train_size),
                                      pool.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
        splits.emplace_back(std::move(train), std::move(test));
    }
    return splits;
}

/// Per repeat: calibrate on the train split, score the test split by
/// Spearman. A degenerate constant prediction counts as 0 for that repeat.
inline CvSummary cross_validate(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                const GroupAssignment& groups, const LabelSet& labels,
                                const EvolutionConfig& cfg, const CvOptions& options,
                                std::uint64_t seed) {
    const auto splits =
        cv_splits(labels, options.train_fraction, options.repeats, seed, options.stratified);

    CvSummary summary;
    summary.repeats = options.repeats;
    summary.train_fraction = options.train_fraction;
    summary.train_size = splits.front().first.size();
    summary.per_repeat.resize(splits.size());
    for (std::size_t r = 0; r < splits.size(); ++r) {
        const auto& [train_idx, test_idx] = splits[r];
        detail::TrainPairs train;
        train.reserve(train_idx.size());
        for (std::size_t i : train_idx) train.push_back(labels.entries[i]);
        const CalibrationResult fit = detail::calibrate_pairs(
            graph, attrs, groups, train, cfg, derive_seed(seed, 2 * r + 1));
        const RankVector ranking =
            hnr_rank(graph, attrs, groups, fit.best_params, cfg.tol, cfg.max_iter);
        std::vector<double> predicted, observed;
        predicted.reserve(test_idx.size());
        observed.reserve(test_idx.size());
        for (std::size_t i : test_idx) {
            predicted.push_back(ranking.scores[labels.entries[i].first]);
            observed.push_back(labels.entries[i].second);
        }
        try {
            summary.per_repeat[r] = spearman(predicted, observed);
        } catch (const ValidationError&) {
            summary.per_repeat[r] = 0.0;
        }
    }

    double sum = 0.0;
    for (double v : summary.per_repeat) sum += v;
    summary.mean = sum / static_cast<double>(summary.per_repeat.size());
    if (summary.per_repeat.size() > 1) {
        double ss = 0.0;
        for (double v : summary.per_repeat) ss += (v - summary.mean) * (v - summary.mean);
        summary.sd = std::sqrt(ss / static_cast<double>(summary.per_repeat.size() - 1));
    }
    return summary;
}

struct SweepRow {
    double fraction = 0.0;
    double mean_spearman = 0.0;
    double sd_spearman = 0.0;
};

inline std::vector<double> decile_fractions() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

inline std::vector<SweepRow> sample_size_sweep(const WeightedDigraph& graph,
                                               const AttributeMatrix& attrs,
                                               const GroupAssignment& groups,
                                               const LabelSet& labels,
                                               const EvolutionConfig& cfg,
                                               std::span<const double> fractions, int repeats,
                                               std::uint64_t seed) {
    if (fractions.empty()) throw ValidationError("sweep: no fractions given");
    std::vector<SweepRow> rows;
    rows.reserve(fractions.size());
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        CvOptions options;
        options.train_fraction = fractions[i];
        options.repeats = repeats;
        const CvSummary s = cross_validate(graph, attrs, groups, labels, cfg, options,
                                           derive_seed(seed, 0x55EE00ULL + i));
        rows.push_back({fractions[i], s.mean, s.sd});
    }
    return rows;
}

struct SyntheticDataset {
    WeightedDigraph graph;
    AttributeMatrix attrs;
    GroupAssignment groups;
    HnrParams hidden_params;
    LabelSet labels;
};

struct SynthOptions {
    std::size_t nodes = 300;
    int groups = 2;
    int attrs = 3;
    double noise_sd = 0.0;
    int edges_per_node = 3;
    // hidden damping factors are drawn from this sub-box; narrowing it away
    // from 0 guarantees the labels carry a topology signal
    double damping_lo = 0.0;
    double damping_hi = kMaxDamping;
    // explicit per-group hidden damping, overriding the draw; must match the
    // realized group count
    std::vector<double> hidden_damping;
};

/// Scale-free-style directed graph (preferential attachment, uniform(1,10)
/// weights), uniform standardized attributes, default grouping, hidden
/// parameters uniform in the legal box, labels = min-max normalized model
/// scores under the hidden parameters plus optional Gaussian noise.
inline SyntheticDataset generate_synthetic(const SynthOptions& options, std::uint64_t seed) {
    if (options.nodes < 10) throw ValidationError("synth: need at least 10 nodes");
    if (options.groups < 1 || options.groups > 5) {
        throw ValidationError("synth: groups outside [1,5]");
    }
    if (options.attrs < 1 || options.attrs > 8) throw ValidationError("synth: attrs outside [1,8]");
    if (options.noise_sd < 0.0) throw ValidationError("synth: noise sd must be >= 0");
    if (options.edges_per_node < 1) throw ValidationError("synth: edges_per_node must be >= 1");
    if (!(options.damping_lo >= 0.0 && options.damping_lo <= options.damping_hi &&
          options.damping_hi <= kMaxDamping)) {
        throw ValidationError("synth: damping range outside [0, 0.99]");
    }

    Rng structure_rng(derive_seed(seed, 1));
    Rng weight_rng(derive_seed(seed, 2));
    Rng attr_rng(derive_seed(seed, 3));
    Rng param_rng(derive_seed(seed, 4));
    Rng noise_rng(derive_seed(seed, 5));

    const std::size_t n = options.nodes;
    auto node_name = [](std::size_t i) { return "n" + std::to_string(i + 1); };

    std::vector<EdgeRecord> records;
    std::vector<double> pref(n, 1.0);  // in-degree + 1
    for (std::size_t v = 1; v < n; ++v) {
        const std::size_t k = std::min<std::size_t>(options.edges_per_node, v);
        std::vector<std::size_t> targets;
        while (targets.size() < k) {
            double total = 0.0;
            for (std::size_t j = 0; j < v; ++j) total += pref[j];
            double draw = structure_rng.uniform() * total;
            std::size_t pick = v - 1;
            for (std::size_t j = 0; j < v; ++j) {
                draw -= pref[j];
                if (draw <= 0.0) {
                    pick = j;
                    break;
                }
            }
            if (std::find(targets.begin(), targets.end(), pick) != targets.end()) continue;
            targets.push_back(pick);
        }
        for (std::size_t t : targets) {
            records.push_back({node_name(v), node_name(t), weight_rng.uniform(1.0, 10.0)});
            pref[t] += 1.0;
        }
    }

    SyntheticDataset data;
    data.graph = build_graph(records);

    std::vector<std::vector<double>> raw(n, std::vector<double>(options.attrs));
    for (auto& row : raw) {
        for (double& v : row) v = attr_rng.uniform();
    }
    data.attrs = standardize_attributes(raw);

    data.groups = options.groups == 1 ? GroupAssignment::single_group(n)
                                      : assign_groups_default(data.graph, options.groups - 1);

    const std::size_t realized = data.groups.group_count;
    data.hidden_params.damping.resize(realized);
    data.hidden_params.attr_weights.assign(realized, std::vector<double>(options.attrs));
    for (std::size_t g = 0; g < realized; ++g) {
        data.hidden_params.damping[g] = param_rng.uniform(options.damping_lo, options.damping_hi);
        for (double& a : data.hidden_params.attr_weights[g]) a = param_rng.uniform();
    }
    if (!options.hidden_damping.empty()) {
        if (options.hidden_damping.size() != realized) {
            throw ValidationError("synth: hidden_damping has " +
                                  std::to_string(options.hidden_damping.size()) +
                                  " entries but the grouping realized " +
                                  std::to_string(realized) + " groups");
        }
        data.hidden_params.damping = options.hidden_damping;
        data.hidden_params.validate(realized, options.attrs);
    }

    const RankVector truth =
        hnr_rank(data.graph, data.attrs, data.groups, data.hidden_params, 1e-12, 200000);
    // noise is multiplicative (Gaussian on log-scores): model scores are
    // heavy-tailed, so additive noise at any single sd would either vanish
    // against the hubs or drown the bulk
    std::vector<double> values = truth.scores;
    if (options.noise_sd > 0.0) {
        for (double& v : values) v *= std::exp(noise_rng.normal(0.0, options.noise_sd));
    }
    values = minmax_normalize(values);
    std::vector<std::pair<std::size_t, double>> pairs(n);
    for (std::size_t i = 0; i < n; ++i) pairs[i] = {i, values[i]};
    data.labels = LabelSet::from_pairs(std::move(pairs), n);
    return data;
}

}  // namespace hnr
