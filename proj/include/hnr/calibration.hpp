#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hnr/common.hpp"
#include "hnr/graph.hpp"
#include "hnr/parallel.hpp"
#include "hnr/rankers.hpp"
#include "hnr/rng.hpp"
#include "hnr/spearman.hpp"

namespace hnr {

enum class LossKind { L1, L2, NegSpearman };

inline const char* loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::L1: return "l1";
        case LossKind::L2: return "l2";
        case LossKind::NegSpearman: return "neg_spearman";
    }
    return "?";
}

inline LossKind parse_loss(const std::string& name) {
    if (name == "l1") return LossKind::L1;
    if (name == "l2") return LossKind::L2;
    if (name == "neg_spearman") return LossKind::NegSpearman;
    throw ValidationError("unknown loss '" + name + "' (expected l1, l2 or neg_spearman)");
}

enum class Optimizer { Ga, De };

inline const char* optimizer_name(Optimizer o) { return o == Optimizer::Ga ? "ga" : "de"; }

inline Optimizer parse_optimizer(const std::string& name) {
    if (name == "ga") return Optimizer::Ga;
    if (name == "de") return Optimizer::De;
    throw ValidationError("unknown optimizer '" + name + "' (expected ga or de)");
}

struct EvolutionConfig {
    int population = 50;
    int generations = 100;
    int tournament_size = 3;
    double crossover_rate = 0.9;
    double mutation_sigma = 0.1;
    double mutation_rate = 0.0;  // <= 0 selects the 1/genes default
    int elitism = 1;
    double target_loss = 0.0;  // early stop when best loss drops below this
    LossKind loss = LossKind::NegSpearman;
    Optimizer optimizer = Optimizer::Ga;
    double de_weight = 0.7;     // DE differential weight F
    double de_crossover = 0.9;  // DE crossover probability CR
    double tol = 1e-9;
    int max_iter = 1000;
    unsigned threads = 1;
    bool bootstrap_full_budget = false;

    void validate() const {
        if (population < 4) throw ValidationError("config: population must be >= 4");
        if (generations < 1) throw ValidationError("config: generations must be >= 1");
        if (tournament_size < 1 || tournament_size > population) {
            throw ValidationError("config: tournament_size outside [1, population]");
        }
        if (crossover_rate < 0.0 || crossover_rate > 1.0) {
            throw ValidationError("config: crossover_rate outside [0,1]");
        }
        if (!(mutation_sigma > 0.0)) throw ValidationError("config: mutation_sigma must be > 0");
        if (mutation_rate > 1.0) throw ValidationError("config: mutation_rate above 1");
        if (elitism < 0 || elitism >= population) {
            throw ValidationError("config: elitism outside [0, population)");
        }
        if (target_loss < 0.0) throw ValidationError("config: target_loss must be >= 0");
        if (de_crossover < 0.0 || de_crossover > 1.0) {
            throw ValidationError("config: de_crossover outside [0,1]");
        }
        if (!(de_weight > 0.0)) throw ValidationError("config: de_weight must be > 0");
        if (!(tol > 0.0) || max_iter < 1) throw ValidationError("config: invalid tol/max_iter");
    }
};

/// Flat chromosome layout: per group k the block (d(k), a(k)_1 .. a(k)_m),
/// blocks concatenated over groups. Damping genes map onto [0, 0.99].
inline HnrParams decode_chromosome(std::span<const double> genes, std::size_t groups,
                                   std::size_t attrs) {
    if (genes.size() != groups * (1 + attrs)) {
        throw ValidationError("decode_chromosome: expected " +
                              std::to_string(groups * (1 + attrs)) + " genes, got " +
                              std::to_string(genes.size()));
    }
    for (double g : genes) {
        if (!(g >= 0.0 && g <= 1.0)) {
            throw ValidationError("decode_chromosome: gene outside [0,1]");
        }
    }
    HnrParams p;
    p.damping.resize(groups);
    p.attr_weights.assign(groups, std::vector<double>(attrs));
    for (std::size_t k = 0; k < groups; ++k) {
        const std::size_t base = k * (1 + attrs);
        p.damping[k] = kMaxDamping * genes[base];
        for (std::size_t j = 0; j < attrs; ++j) p.attr_weights[k][j] = genes[base + 1 + j];
    }
    return p;
}

inline std::vector<double> encode_params(const HnrParams& params) {
    const std::size_t groups = params.group_count();
    const std::size_t attrs = params.attr_count();
    std::vector<double> genes;
    genes.reserve(groups * (1 + attrs));
    for (std::size_t k = 0; k < groups; ++k) {
        genes.push_back(params.damping[k] / kMaxDamping);
        for (double a : params.attr_weights[k]) genes.push_back(a);
    }
    return genes;
}

/// Min-max to [0,1]; a constant vector maps to all-0.5.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = hi > lo ? (values[i] - lo) / (hi - lo) : 0.5;
    }
    return out;
}

inline double loss_value(std::span<const double> predicted, std::span<const double> observed,
                         LossKind kind) {
    if (predicted.size() != observed.size()) throw ValidationError("loss: length mismatch");
    if (predicted.size() < 2) throw ValidationError("loss: need at least 2 labeled nodes");
    switch (kind) {
        case LossKind::L1:
        case LossKind::L2: {
            const auto yhat = minmax_normalize(predicted);
            const auto y = minmax_normalize(observed);
            double acc = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double diff = yhat[i] - y[i];
                acc += kind == LossKind::L1 ? std::abs(diff) : diff * diff;
            }
            return acc / static_cast<double>(y.size());
        }
        case LossKind::NegSpearman: {
            if (predicted.size() < 3) {
                throw ValidationError("loss: neg_spearman needs at least 3 labeled nodes");
            }
            try {
                return 1.0 - spearman(predicted, observed);
            } catch (const ValidationError&) {
                return 1.0;  // undefined correlation convention
            }
        }
    }
    throw ValidationError("loss: unknown kind");
}

/// Eq.-6 style transform mapping a minimization loss onto (0,1].
inline double fitness_from_loss(double loss) {
    if (std::isnan(loss) || loss < 0.0) throw ValidationError("fitness: loss must be >= 0");
    return 1.0 / (1.0 + loss);
}

struct FitnessHistory {
    std::vector<double> best;
    std::vector<double> mean;
};

struct BootstrapIntervals {
    int resamples = 0;
    std::vector<std::array<double, 2>> damping;                    // per group [lo, hi]
    std::vector<std::vector<std::array<double, 2>>> attr_weights;  // per group, per attr
};

struct CalibrationResult {
    HnrParams best_params;
    double best_loss = std::numeric_limits<double>::infinity();
    double best_fitness = 0.0;
    FitnessHistory history;
    LossKind loss = LossKind::NegSpearman;
    std::vector<std::size_t> train_nodes;
    std::optional<BootstrapIntervals> bootstrap;
};

namespace detail {

using TrainPairs = std::vector<std::pair<std::size_t, double>>;

struct FitnessEvaluator {
    const WeightedDigraph& graph;
    const AttributeMatrix& attrs;
    const GroupAssignment& groups;
    const TrainPairs& pairs;
    const EvolutionConfig& cfg;

    /// Convergence failures are penalized (fitness 0), never fatal.
    std::pair<double, double> operator()(std::span<const double> genes) const {
        const HnrParams params = decode_chromosome(genes, groups.group_count, attrs.cols());
        RankVector ranking;
        try {
            ranking = hnr_rank(graph, attrs, groups, params, cfg.tol, cfg.max_iter);
        } catch (const ConvergenceError&) {
            return {std::numeric_limits<double>::infinity(), 0.0};
        }
        std::vector<double> predicted(pairs.size()), observed(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            predicted[i] = ranking.scores[pairs[i].first];
            observed[i] = pairs[i].second;
        }
        const double loss = loss_value(predicted, observed, cfg.loss);
        return {loss, fitness_from_loss(loss)};
    }
};

inline void evaluate_population(const FitnessEvaluator& eval,
                                const std::vector<std::vector<double>>& pop,
                                std::vector<double>& losses, std::vector<double>& fits,
                                unsigned threads) {
    losses.resize(pop.size());
    fits.resize(pop.size());
    parallel_for(pop.size(), threads, [&](std::size_t i) {
        const auto [loss, fit] = eval(pop[i]);
        losses[i] = loss;
        fits[i] = fit;
    });
}

inline std::size_t best_index(const std::vector<double>& losses) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) {
        if (losses[i] < losses[best]) best = i;
    }
    return best;
}

inline void record_history(FitnessHistory& h, const std::vector<double>& fits) {
    double best = 0.0, sum = 0.0;
    for (double f : fits) {
        best = std::max(best, f);
        sum += f;
    }
    h.best.push_back(best);
    h.mean.push_back(sum / static_cast<double>(fits.size()));
}

inline void check_train_pairs(const TrainPairs& pairs, const EvolutionConfig& cfg,
                              std::size_t node_count) {
    const std::size_t minimum = cfg.loss == LossKind::NegSpearman ? 3 : 2;
    if (pairs.size() < minimum) {
        throw ValidationError("calibration: need at least " + std::to_string(minimum) +
                              " labeled nodes for loss " + loss_name(cfg.loss));
    }
    for (const auto& [node, value] : pairs) {
        if (node >= node_count) throw ValidationError("calibration: label node out of range");
        if (!std::isfinite(value)) throw ValidationError("calibration: non-finite label");
    }
}

inline CalibrationResult run_ga(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                const GroupAssignment& groups, const TrainPairs& pairs,
                                const EvolutionConfig& cfg, std::uint64_t seed) {
    const std::size_t genes = groups.group_count * (1 + attrs.cols());
    const double mutation_rate =
        cfg.mutation_rate > 0.0 ? cfg.mutation_rate : 1.0 / static_cast<double>(genes);
    Rng rng(derive_seed(seed, 0x6A01ULL));
    FitnessEvaluator eval{graph, attrs, groups, pairs, cfg};

    std::vector<std::vector<double>> pop(cfg.population, std::vector<double>(genes));
    for (auto& member : pop) {
        for (double& g : member) g = rng.uniform();
    }
    std::vector<double> losses, fits;
    evaluate_population(eval, pop, losses, fits, cfg.threads);

    CalibrationResult result;
    result.loss = cfg.loss;
    record_history(result.history, fits);

    auto tournament = [&]() -> std::size_t {
        std::size_t winner = rng.integer(pop.size());
        for (int t = 1; t < cfg.tournament_size; ++t) {
            const std::size_t c = rng.integer(pop.size());
            if (losses[c] < losses[winner] || (losses[c] == losses[winner] && c < winner)) {
                winner = c;
            }
        }
        return winner;
    };

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        if (losses[best_index(losses)] < cfg.target_loss) break;

        std::vector<std::vector<double>> next;
        next.reserve(pop.size());
        // elitism: carry the best members over unchanged
        std::vector<std::size_t> order(pop.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return losses[a] < losses[b] || (losses[a] == losses[b] && a < b);
        });
        for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[e]]);

        while (next.size() < pop.size()) {
            const auto& p1 = pop[tournament()];
            const auto& p2 = pop[tournament()];
            std::vector<double> child = p1;
            if (rng.uniform() < cfg.crossover_rate) {
                for (std::size_t j = 0; j < genes; ++j) {
                    if (rng.uniform() < 0.5) child[j] = p2[j];
                }
            }
            for (std::size_t j = 0; j < genes; ++j) {
                if (rng.uniform() < mutation_rate) {
                    child[j] = std::clamp(child[j] + rng.normal(0.0, cfg.mutation_sigma), 0.0, 1.0);
                }
            }
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        evaluate_population(eval, pop, losses, fits, cfg.threads);
        record_history(result.history, fits);
    }

    const std::size_t best = best_index(losses);
    result.best_params = decode_chromosome(pop[best], groups.group_count, attrs.cols());
    result.best_loss = losses[best];
    result.best_fitness = fits[best];
    return result;
}

inline CalibrationResult run_de(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                const GroupAssignment& groups, const TrainPairs& pairs,
                                const EvolutionConfig& cfg, std::uint64_t seed) {
    const std::size_t genes = groups.group_count * (1 + attrs.cols());
    Rng rng(derive_seed(seed, 0xDE01ULL));
    FitnessEvaluator eval{graph, attrs, groups, pairs, cfg};

    std::vector<std::vector<double>> pop(cfg.population, std::vector<double>(genes));
    for (auto& member : pop) {
        for (double& g : member) g = rng.uniform();
    }
    std::vector<double> losses, fits;
    evaluate_population(eval, pop, losses, fits, cfg.threads);

    CalibrationResult result;
    result.loss = cfg.loss;
    record_history(result.history, fits);

    const std::size_t np = pop.size();
    std::vector<double> trial_losses, trial_fits;
    for (int gen = 1; gen <= cfg.generations; ++gen) {
        if (losses[best_index(losses)] < cfg.target_loss) break;

        // DE/rand/1/bin, bounds handled by clipping; trials are built first so
        // fitness evaluation can run in parallel behind a deterministic barrier
        std::vector<std::vector<double>> trials(np, std::vector<double>(genes));
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1, r2, r3;
            do {
                r1 = rng.integer(np);
            } while (r1 == i);
            do {
                r2 = rng.integer(np);
            } while (r2 == i || r2 == r1);
            do {
                r3 = rng.integer(np);
            } while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t jrand = rng.integer(genes);
            for (std::size_t j = 0; j < genes; ++j) {
                if (rng.uniform() < cfg.de_crossover || j == jrand) {
                    trials[i][j] = std::clamp(
                        pop[r1][j] + cfg.de_weight * (pop[r2][j] - pop[r3][j]), 0.0, 1.0);
                } else {
                    trials[i][j] = pop[i][j];
                }
            }
        }
        evaluate_population(eval, trials, trial_losses, trial_fits, cfg.threads);
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_losses[i] <= losses[i]) {
                pop[i] = std::move(trials[i]);
                losses[i] = trial_losses[i];
                fits[i] = trial_fits[i];
            }
        }
        record_history(result.history, fits);
    }

    const std::size_t best = best_index(losses);
    result.best_params = decode_chromosome(pop[best], groups.group_count, attrs.cols());
    result.best_loss = losses[best];
    result.best_fitness = fits[best];
    return result;
}

inline CalibrationResult calibrate_pairs(const WeightedDigraph& graph,
                                         const AttributeMatrix& attrs,
                                         const GroupAssignment& groups, const TrainPairs& pairs,
                                         const EvolutionConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    groups.validate(graph.node_count());
    if (attrs.rows() != graph.node_count()) {
        throw ValidationError("calibration: attribute row count mismatch");
    }
    check_train_pairs(pairs, cfg, graph.node_count());
    CalibrationResult result = cfg.optimizer == Optimizer::Ga
                                   ? run_ga(graph, attrs, groups, pairs, cfg, seed)
                                   : run_de(graph, attrs, groups, pairs, cfg, seed);
    std::vector<std::size_t> nodes;
    nodes.reserve(pairs.size());
    for (const auto& [node, value] : pairs) nodes.push_back(node);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    result.train_nodes = std::move(nodes);
    return result;
}

}  // namespace detail

inline CalibrationResult calibrate(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                   const GroupAssignment& groups, const LabelSet& labels,
                                   const EvolutionConfig& cfg, std::uint64_t seed) {
    return detail::calibrate_pairs(graph, attrs, groups, labels.entries, cfg, seed);
}

inline CalibrationResult ga_optimize(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                     const GroupAssignment& groups, const LabelSet& labels,
                                     EvolutionConfig cfg, std::uint64_t seed) {
    cfg.optimizer = Optimizer::Ga;
    return calibrate(graph, attrs, groups, labels, cfg, seed);
}

inline CalibrationResult de_optimize(const WeightedDigraph& graph, const AttributeMatrix& attrs,
                                     const GroupAssignment& groups, const LabelSet& labels,
                                     EvolutionConfig cfg, std::uint64_t seed) {
    cfg.optimizer = Optimizer::De;
    return calibrate(graph, attrs, groups, labels, cfg, seed);
}

/// 2.5% / 97.5% percentile with linear interpolation on the sorted sample.
inline std::array<double, 2> percentile_interval(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    return {at(0.025), at(0.975)};
}

/// Resample the training labels with replacement B times and recalibrate each
/// replicate (reduced budget pop 24 / 40 generations unless
/// cfg.bootstrap_full_budget). All replicates share one optimizer sub-seed so
/// interval width reflects data variation only.
inline BootstrapIntervals bootstrap_coefficients(const WeightedDigraph& graph,
                                                 const AttributeMatrix& attrs,
                                                 const GroupAssignment& groups,
                                                 const LabelSet& labels, EvolutionConfig cfg,
                                                 int resamples, std::uint64_t seed) {
    if (resamples < 10) throw ValidationError("bootstrap: need at least 10 resamples");
    cfg.validate();
    if (!cfg.bootstrap_full_budget) {
        cfg.population = 24;
        cfg.generations = 40;
    }
    const std::size_t count = labels.size();
    if (count == 0) throw ValidationError("bootstrap: empty label set");

    Rng data_rng(derive_seed(seed, 0xB007ULL));
    const std::uint64_t optimizer_seed = derive_seed(seed, 0xB008ULL);

    const std::size_t groups_n = groups.group_count;
    const std::size_t attrs_n = attrs.cols();
    std::vector<std::vector<double>> damping_samples(groups_n);
    std::vector<std::vector<std::vector<double>>> weight_samples(
        groups_n, std::vector<std::vector<double>>(attrs_n));

    for (int b = 0; b < resamples; ++b) {
        detail::TrainPairs resample;
        int attempts = 0;
        while (true) {
            resample.clear();
            for (std::size_t i = 0; i < count; ++i) {
                resample.push_back(labels.entries[data_rng.integer(count)]);
            }
            std::sort(resample.begin(), resample.end());
            std::size_t distinct = 1;
            for (std::size_t i = 1; i < resample.size(); ++i) {
                if (resample[i].first != resample[i - 1].first) ++distinct;
            }
            if (distinct >= 3) break;
            if (++attempts >= 100) {
                throw ValidationError("bootstrap: resample " + std::to_string(b) +
                                      " kept fewer than 3 distinct nodes after 100 redraws");
            }
        }
        const CalibrationResult r =
            detail::calibrate_pairs(graph, attrs, groups, resample, cfg, optimizer_seed);
        for (std::size_t k = 0; k < groups_n; ++k) {
            damping_samples[k].push_back(r.best_params.damping[k]);
            for (std::size_t j = 0; j < attrs_n; ++j) {
                weight_samples[k][j].push_back(r.best_params.attr_weights[k][j]);
            }
        }
    }

    BootstrapIntervals out;
    out.resamples = resamples;
    out.damping.reserve(groups_n);
    out.attr_weights.resize(groups_n);
    for (std::size_t k = 0; k < groups_n; ++k) {
        out.damping.push_back(percentile_interval(damping_samples[k]));
        for (std::size_t j = 0; j < attrs_n; ++j) {
            out.attr_weights[k].push_back(percentile_interval(weight_samples[k][j]));
        }
    }
    return out;
}

}  // namespace hnr
