#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hnr/calibration.hpp"
#include "hnr/evaluation.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;

TEST_CASE("chromosome decoding") {
    SECTION("single group layout with damping cap mapping") {
        const std::vector<double> genes{1.0, 0.5, 0.25};
        const auto p = hnr::decode_chromosome(genes, 1, 2);
        CHECK(p.damping == std::vector<double>{0.99});
        CHECK(p.attr_weights == std::vector<std::vector<double>>{{0.5, 0.25}});
    }
    SECTION("two-group block layout") {
        const std::vector<double> genes{0.0, 1.0, 1.0, 0.0};
        const auto p = hnr::decode_chromosome(genes, 2, 1);
        CHECK(p.damping == std::vector<double>{0.0, 0.99});
        CHECK(p.attr_weights == std::vector<std::vector<double>>{{1.0}, {0.0}});
    }
    SECTION("wrong length and out-of-box genes are rejected") {
        CHECK_THROWS_AS(hnr::decode_chromosome(std::vector<double>{0.5}, 1, 2),
                        hnr::ValidationError);
        CHECK_THROWS_AS(hnr::decode_chromosome(std::vector<double>{1.5, 0.0, 0.0}, 1, 2),
                        hnr::ValidationError);
    }
    SECTION("encode/decode round-trips random parameters") {
        hnr::Rng rng(31);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t k = 1 + rng.integer(4);
            const std::size_t m = rng.integer(5);
            const auto p = oracle::random_params(rng, k, m);
            const auto q = hnr::decode_chromosome(hnr::encode_params(p), k, m);
            for (std::size_t g = 0; g < k; ++g) {
                CHECK_THAT(q.damping[g], WithinAbs(p.damping[g], 1e-14));
                CHECK(q.attr_weights[g] == p.attr_weights[g]);
            }
        }
    }
}

TEST_CASE("loss functions") {
    SECTION("perfect fit is zero under every loss") {
        const std::vector<double> y{0.1, 0.7, 0.3, 0.9};
        CHECK(hnr::loss_value(y, y, hnr::LossKind::L1) == 0.0);
        CHECK(hnr::loss_value(y, y, hnr::LossKind::L2) == 0.0);
        CHECK(hnr::loss_value(y, y, hnr::LossKind::NegSpearman) == 0.0);
    }
    SECTION("a reversed ordering maxes out neg-spearman") {
        const std::vector<double> yhat{1, 2, 3};
        const std::vector<double> y{3, 2, 1};
        CHECK(hnr::loss_value(yhat, y, hnr::LossKind::NegSpearman) == 2.0);
    }
    SECTION("hand-worked values") {
        const std::vector<double> yhat{0.1, 0.4, 0.5};
        const std::vector<double> y{1, 2, 4};
        CHECK(hnr::loss_value(yhat, y, hnr::LossKind::NegSpearman) == 0.0);
        CHECK_THAT(hnr::loss_value(yhat, y, hnr::LossKind::L1), WithinAbs(5.0 / 36.0, 1e-12));
        CHECK_THAT(hnr::loss_value(yhat, y, hnr::LossKind::L2), WithinAbs(25.0 / 432.0, 1e-12));
    }
    SECTION("size preconditions") {
        const std::vector<double> one{0.3};
        CHECK_THROWS_AS(hnr::loss_value(one, one, hnr::LossKind::L1), hnr::ValidationError);
        const std::vector<double> two{0.3, 0.6};
        CHECK_THROWS_AS(hnr::loss_value(two, two, hnr::LossKind::NegSpearman),
                        hnr::ValidationError);
        CHECK(hnr::loss_value(two, two, hnr::LossKind::L1) == 0.0);
    }
    SECTION("constant prediction under neg-spearman scores 1 by convention") {
        const std::vector<double> yhat{0.5, 0.5, 0.5};
        const std::vector<double> y{1, 2, 3};
        CHECK(hnr::loss_value(yhat, y, hnr::LossKind::NegSpearman) == 1.0);
    }
}

TEST_CASE("fitness transform") {
    CHECK(hnr::fitness_from_loss(0.0) == 1.0);
    CHECK(hnr::fitness_from_loss(1.0) == 0.5);
    CHECK(hnr::fitness_from_loss(9.0) == 0.1);
    CHECK_THROWS_AS(hnr::fitness_from_loss(-0.5), hnr::ValidationError);

    SECTION("argmax fitness is argmin loss") {
        hnr::Rng rng(47);
        std::vector<double> losses(40);
        for (double& l : losses) l = rng.uniform(0.0, 5.0);
        std::size_t argmin = 0, argmax = 0;
        for (std::size_t i = 1; i < losses.size(); ++i) {
            if (losses[i] < losses[argmin]) argmin = i;
            if (hnr::fitness_from_loss(losses[i]) > hnr::fitness_from_loss(losses[argmax])) {
                argmax = i;
            }
        }
        CHECK(argmin == argmax);
    }
}

namespace {

hnr::SyntheticDataset small_task(std::uint64_t seed, std::size_t nodes = 60) {
    hnr::SynthOptions options;
    options.nodes = nodes;
    options.groups = 2;
    options.attrs = 2;
    return hnr::generate_synthetic(options, seed);
}

}  // namespace

TEST_CASE("evolutionary search behavior") {
    const auto data = small_task(11);
    hnr::EvolutionConfig cfg;
    cfg.population = 12;
    cfg.generations = 10;

    SECTION("best fitness equals the re-evaluated fitness of the best params") {
        cfg.generations = 1;
        const auto result =
            hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 5);
        const auto ranking = hnr::hnr_rank(data.graph, data.attrs, data.groups,
                                           result.best_params, cfg.tol, cfg.max_iter);
        std::vector<double> yhat, y;
        for (const auto& [node, value] : data.labels.entries) {
            yhat.push_back(ranking.scores[node]);
            y.push_back(value);
        }
        const double loss = hnr::loss_value(yhat, y, cfg.loss);
        CHECK_THAT(result.best_fitness, WithinAbs(hnr::fitness_from_loss(loss), 1e-12));
        CHECK_THAT(result.best_loss, WithinAbs(loss, 1e-12));
    }

    SECTION("elitism keeps the best fitness non-decreasing across ten seeds") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto result =
                hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, seed);
            for (std::size_t g = 1; g < result.history.best.size(); ++g) {
                CHECK(result.history.best[g] >= result.history.best[g - 1]);
            }
        }
    }

    SECTION("de selection is monotone too") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto result =
                hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, seed);
            for (std::size_t g = 1; g < result.history.best.size(); ++g) {
                CHECK(result.history.best[g] >= result.history.best[g - 1]);
            }
        }
    }

    SECTION("returned parameters stay in the legal box") {
        const auto result =
            hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 3);
        for (double d : result.best_params.damping) {
            CHECK(d >= 0.0);
            CHECK(d <= hnr::kMaxDamping);
        }
        for (const auto& ws : result.best_params.attr_weights) {
            for (double w : ws) {
                CHECK(w >= 0.0);
                CHECK(w <= 1.0);
            }
        }
    }

    SECTION("population below 4 is rejected") {
        cfg.population = 3;
        CHECK_THROWS_AS(
            hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 1),
            hnr::ValidationError);
        CHECK_THROWS_AS(
            hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 1),
            hnr::ValidationError);
    }

    SECTION("same seed reproduces the full result, different seeds differ") {
        const auto a = hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 8);
        const auto b = hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 8);
        CHECK(a.best_params.damping == b.best_params.damping);
        CHECK(a.best_params.attr_weights == b.best_params.attr_weights);
        CHECK(a.history.best == b.history.best);
        CHECK(a.history.mean == b.history.mean);
        const auto c = hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 9);
        CHECK(a.history.best != c.history.best);
    }

    SECTION("fitness evaluation is invariant to thread count") {
        auto cfg2 = cfg;
        cfg2.threads = 4;
        const auto a = hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 8);
        const auto b = hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg2, 8);
        CHECK(a.best_params.damping == b.best_params.damping);
        CHECK(a.history.best == b.history.best);
    }

    SECTION("early stop honors target_loss") {
        cfg.target_loss = 2.1;  // everything beats this immediately
        const auto result =
            hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 4);
        CHECK(result.history.best.size() == 1);
    }

    SECTION("non-converging rankings are penalized, not fatal") {
        auto cfg2 = cfg;
        cfg2.max_iter = 1;  // nothing interesting converges in one step
        cfg2.tol = 1e-15;
        cfg2.generations = 2;
        const auto result =
            hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg2, 4);
        CHECK(result.best_fitness >= 0.0);
    }
}

TEST_CASE("synthetic recovery at reduced scale") {
    const auto data = small_task(21, 150);
    hnr::EvolutionConfig cfg;
    cfg.population = 30;
    cfg.generations = 40;

    SECTION("ga") {
        const auto result =
            hnr::ga_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 1);
        CHECK(result.best_loss <= 0.05);
    }
    SECTION("de") {
        const auto result =
            hnr::de_optimize(data.graph, data.attrs, data.groups, data.labels, cfg, 1);
        CHECK(result.best_loss <= 0.05);
    }
}

TEST_CASE("bootstrap intervals") {
    SECTION("fewer than 10 resamples is rejected") {
        const auto data = small_task(5, 30);
        hnr::EvolutionConfig cfg;
        CHECK_THROWS_AS(hnr::bootstrap_coefficients(data.graph, data.attrs, data.groups,
                                                    data.labels, cfg, 5, 1),
                        hnr::ValidationError);
    }

    SECTION("a label set that can never yield 3 distinct nodes errors after redraws") {
        const auto g = hnr::build_graph({{"a", "b", 1}, {"b", "a", 1}});
        const auto attrs = hnr::standardize_attributes({{0.1}, {0.9}});
        const auto labels = hnr::LabelSet::from_pairs({{0, 1.0}, {1, 2.0}}, 2);
        hnr::EvolutionConfig cfg;
        cfg.loss = hnr::LossKind::L1;  // 2 labels would otherwise be legal
        CHECK_THROWS_WITH(
            hnr::bootstrap_coefficients(g, attrs, hnr::GroupAssignment::single_group(2), labels,
                                        cfg, 10, 1),
            Catch::Matchers::ContainsSubstring("100 redraws"));
    }

    SECTION("degenerate 3-node label set gives zero-width intervals") {
        const auto g = hnr::build_graph({{"a", "b", 2}, {"b", "c", 1}, {"c", "a", 3},
                                         {"a", "c", 1}});
        const auto attrs = hnr::standardize_attributes({{0.2}, {0.9}, {0.4}});
        const auto groups = hnr::GroupAssignment::single_group(3);
        const auto labels = hnr::LabelSet::from_pairs({{0, 0.9}, {1, 0.1}, {2, 0.5}}, 3);
        hnr::EvolutionConfig cfg;
        cfg.population = 8;
        cfg.generations = 3;
        cfg.bootstrap_full_budget = true;  // keep the replicates cheap
        const auto intervals =
            hnr::bootstrap_coefficients(g, attrs, groups, labels, cfg, 10, 77);
        REQUIRE(intervals.damping.size() == 1);
        CHECK(intervals.damping[0][0] == intervals.damping[0][1]);
        CHECK(intervals.attr_weights[0][0][0] == intervals.attr_weights[0][0][1]);
    }

    SECTION("intervals stay inside the legal parameter box") {
        const auto data = small_task(33, 40);
        hnr::EvolutionConfig cfg;
        cfg.population = 8;
        cfg.generations = 4;
        cfg.bootstrap_full_budget = true;
        const auto intervals = hnr::bootstrap_coefficients(data.graph, data.attrs, data.groups,
                                                           data.labels, cfg, 12, 3);
        for (const auto& [lo, hi] : intervals.damping) {
            CHECK(lo >= 0.0);
            CHECK(hi <= hnr::kMaxDamping);
            CHECK(lo <= hi);
        }
        for (const auto& per_group : intervals.attr_weights) {
            for (const auto& [lo, hi] : per_group) {
                CHECK(lo >= 0.0);
                CHECK(hi <= 1.0);
                CHECK(lo <= hi);
            }
        }
    }

    SECTION("hidden damping lands inside its 95% interval on a noiseless task") {
        const auto data = small_task(55, 120);
        hnr::EvolutionConfig cfg;
        cfg.loss = hnr::LossKind::L2;  // point-identifies the scores, not just their order
        const auto intervals = hnr::bootstrap_coefficients(data.graph, data.attrs, data.groups,
                                                           data.labels, cfg, 50, 9);
        for (std::size_t k = 0; k < data.hidden_params.damping.size(); ++k) {
            const double d = data.hidden_params.damping[k];
            CHECK(intervals.damping[k][0] <= d);
            CHECK(d <= intervals.damping[k][1]);
        }
    }
}
