#include "divret/eval.hpp"
#include "divret/optimizer.hpp"
#include "divret/random.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace divret;
using divret::test::c1c2_context;

namespace {

constexpr double kLn19PlusLn16 = 1.1118575154181303;

ObjectiveContext random_instance(Rng& rng, std::size_t size, bool nonnegative = true) {
    InstanceSpec spec;
    spec.size = size;
    spec.lambda1 = rng.uniform01() * 8.0;
    spec.lambda2 = rng.uniform01() * 8.0;
    spec.nonnegative_similarities = nonnegative;
    return random_context(rng, spec);
}

// Subsets of size <= n enumerated through bitmasks, independent of the library oracle.
double bitmask_optimum(const ObjectiveContext& ctx, std::size_t n) {
    double best = 0.0;
    const std::uint32_t limit = 1u << ctx.size();
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > n) continue;
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < ctx.size(); ++i)
            if (mask & (1u << i)) s.push_back(i);
        best = std::max(best, objective(ctx, s));
    }
    return best;
}

void expect_trace_invariants(const ObjectiveContext& ctx, const SelectionTrace& t, std::size_t n) {
    ASSERT_LE(t.picks.size(), n);
    double running = 0.0;
    std::vector<std::size_t> prefix;
    for (std::size_t i = 0; i < t.picks.size(); ++i) {
        const auto& p = t.picks[i];
        running += p.gain;
        prefix.push_back(p.position);
        EXPECT_EQ(p.id, ctx[p.position].id);
        EXPECT_NEAR(p.running_objective, running, 1e-9);
        EXPECT_NEAR(p.running_objective, objective(ctx, prefix), 1e-9);
        if (i > 0) EXPECT_LE(p.gain, t.picks[i - 1].gain + 1e-9);
    }
    EXPECT_NEAR(t.objective_value, objective(ctx, prefix), 1e-9);
}

}  // namespace

TEST(Greedy, ModularCaseIsSorting) {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        InstanceSpec spec;
        spec.size = 1 + rng.uniform_index(30);
        spec.lambda2 = 0.0;
        spec.lambda1 = 0.5 + rng.uniform01();
        auto ctx = random_context(rng, spec);
        const std::size_t n = 1 + rng.uniform_index(spec.size);
        std::vector<std::size_t> order(ctx.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return ctx[a].prompt_sim > ctx[b].prompt_sim; });
        order.resize(n);
        EXPECT_EQ(greedy_select(ctx, n).positions(), order);
        EXPECT_EQ(lazy_greedy_select(ctx, n).positions(), order);
    }
}

TEST(Greedy, CrossClusterExample) {
    const auto ctx = c1c2_context(0, 1);
    const auto t = greedy_select(ctx, 2);
    EXPECT_EQ(t.ids(), (std::vector<std::string>{"a", "c"}));
    EXPECT_NEAR(t.objective_value, kLn19PlusLn16, 1e-12);
    EXPECT_FALSE(t.stopped_early);
}

TEST(Greedy, SingleCandidateExhausts) {
    const ObjectiveContext ctx({{"only", 0, 0.4, 0.2, 0}}, 1, 7, 1);
    const auto t = greedy_select(ctx, 3);
    ASSERT_EQ(t.picks.size(), 1u);
    EXPECT_FALSE(t.stopped_early);
    EXPECT_EQ(lazy_greedy_select(ctx, 3), t);
}

TEST(Greedy, EmptyContextGivesEmptyTrace) {
    const ObjectiveContext ctx;
    const auto t = greedy_select(ctx, 3);
    EXPECT_TRUE(t.picks.empty());
    EXPECT_EQ(t.objective_value, 0.0);
    EXPECT_EQ(lazy_greedy_select(ctx, 3), t);
    EXPECT_THROW(greedy_select(c1c2_context(1, 1), 0), PreconditionError);
}

TEST(Greedy, StopsEarlyOnNegativeGain) {
    const ObjectiveContext ctx({{"good", 0, 0.5, 0.0, 0}, {"bad", 1, -0.8, 0.1, 1}, {"worse", 2, -0.9, 0.0, 2}}, 3, 1, 1);
    const auto t = greedy_select(ctx, 3);
    EXPECT_EQ(t.ids(), std::vector<std::string>{"good"});
    EXPECT_TRUE(t.stopped_early);
    EXPECT_EQ(lazy_greedy_select(ctx, 3), t);
}

TEST(Greedy, TieBreakPrefersSimilarityThenIngestOrder) {
    // Zero rewards: gains equal prompt_sim.
    const ObjectiveContext ctx({{"late", 5, 0.2, 0.0, 0}, {"early", 1, 0.2, 0.0, 1}, {"rel", 3, 0.3, 0.0, 2}}, 3, 1, 0);
    EXPECT_EQ(greedy_select(ctx, 3).ids(), (std::vector<std::string>{"rel", "early", "late"}));
    EXPECT_EQ(lazy_greedy_select(ctx, 3).ids(), (std::vector<std::string>{"rel", "early", "late"}));

    // Same total gain with different composition: higher prompt_sim wins.
    double r = std::expm1(0.5);
    while (std::log1p(r) < 0.5) r = std::nextafter(r, 1.0);
    while (std::log1p(r) > 0.5) r = std::nextafter(r, 0.0);
    ASSERT_EQ(std::log1p(r), 0.5);
    const ObjectiveContext mixed({{"div", 0, 0.0, r, 0}, {"sim", 1, 0.5, 0.0, 1}}, 2, 1, 1);
    EXPECT_EQ(greedy_select(mixed, 1).ids(), std::vector<std::string>{"sim"});
    EXPECT_EQ(lazy_greedy_select(mixed, 1).ids(), std::vector<std::string>{"sim"});
}

TEST(LazyGreedy, MatchesNaiveOnRandomInstances) {
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const bool nonneg = trial % 3 != 0;
        auto ctx = random_instance(rng, 1 + rng.uniform_index(40), nonneg);
        if (trial % 5 == 0) {
            // Quantized values force exact gain ties.
            std::vector<ObjectiveContext::Item> items(ctx.items().begin(), ctx.items().end());
            for (auto& it : items) {
                it.prompt_sim = std::round(it.prompt_sim * 4) / 4;
                it.reward = std::round(it.reward * 2) / 2;
            }
            ctx = ObjectiveContext(std::move(items), ctx.cluster_count(), ctx.lambda1(), ctx.lambda2());
        }
        const std::size_t n = 1 + rng.uniform_index(ctx.size() + 2);
        const auto naive = greedy_select(ctx, n);
        const auto lazy = lazy_greedy_select(ctx, n);
        EXPECT_EQ(naive, lazy) << "trial " << trial;
        expect_trace_invariants(ctx, naive, n);
        EXPECT_EQ(greedy_select(ctx, n), naive);
    }
}

TEST(LazyGreedy, SavesEvaluationsOnLargeInstance) {
    Rng rng(3);
    InstanceSpec spec;
    spec.size = 1000;
    const auto ctx = random_context(rng, spec);
    SelectionStats naive_stats, lazy_stats;
    const auto naive = greedy_select(ctx, 8, &naive_stats);
    const auto lazy = lazy_greedy_select(ctx, 8, &lazy_stats);
    EXPECT_EQ(naive, lazy);
    EXPECT_GT(naive_stats.gain_evaluations, 7000u);
    EXPECT_LT(lazy_stats.gain_evaluations * 4, naive_stats.gain_evaluations);
}

TEST(LazyGreedy, ModularCaseNeedsNoStaleWork) {
    Rng rng(4);
    InstanceSpec spec;
    spec.size = 1000;
    spec.lambda2 = 0.0;
    const auto ctx = random_context(rng, spec);
    for (std::size_t n : {1u, 8u, 50u}) {
        SelectionStats stats;
        const auto lazy = lazy_greedy_select(ctx, n, &stats);
        EXPECT_EQ(lazy, greedy_select(ctx, n));
        EXPECT_LE(stats.gain_evaluations, ctx.size() + n);
        EXPECT_LE(stats.stale_reevaluations, n);
    }
}

TEST(BruteForce, Examples) {
    const auto ctx = c1c2_context(0, 1);
    const auto best = brute_force_optimal(ctx, 2);
    EXPECT_EQ(best.ids, (std::vector<std::string>{"a", "c"}));
    EXPECT_NEAR(best.value, kLn19PlusLn16, 1e-12);

    const auto all = brute_force_optimal(c1c2_context(1, 1), 5);
    EXPECT_EQ(all.ids, (std::vector<std::string>{"a", "b", "c"}));

    const auto modular = brute_force_optimal(c1c2_context(1, 0), 2);
    EXPECT_EQ(modular.ids, (std::vector<std::string>{"a", "b"}));
}

TEST(BruteForce, TiesResolveToLeastIdList) {
    const ObjectiveContext ctx({{"d", 0, 0.5, 0, 0}, {"b", 1, 0.5, 0, 1}, {"c", 2, 0.5, 0, 2}, {"a", 3, 0.1, 0, 3}}, 4,
                               1, 0);
    EXPECT_EQ(brute_force_optimal(ctx, 2).ids, (std::vector<std::string>{"b", "c"}));
}

TEST(BruteForce, SizeGuard) {
    Rng rng(5);
    InstanceSpec spec;
    spec.size = 23;
    const auto big = random_context(rng, spec);
    EXPECT_THROW(brute_force_optimal(big, 2), PreconditionError);
    EXPECT_THROW(brute_force_optimal(c1c2_context(1, 1), 7), PreconditionError);
}

TEST(BruteForce, MatchesBitmaskEnumeration) {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ctx = random_instance(rng, 1 + rng.uniform_index(12), trial % 2 == 0);
        const std::size_t n = 1 + rng.uniform_index(std::min<std::size_t>(6, ctx.size()));
        const auto best = brute_force_optimal(ctx, n);
        EXPECT_NEAR(best.value, bitmask_optimum(ctx, n), 1e-12);
        EXPECT_NEAR(best.value, objective(ctx, best.positions), 1e-12);
        EXPECT_TRUE(std::is_sorted(best.ids.begin(), best.ids.end()));
    }
}

TEST(Audit, ModularAndSymmetricInstancesAreExact) {
    Rng rng(7);
    InstanceSpec spec;
    spec.lambda2 = 0.0;
    const auto modular = random_context(rng, spec);
    const auto r = approximation_audit(modular, 4);
    ASSERT_TRUE(r.ratio.has_value());
    EXPECT_NEAR(*r.ratio, 1.0, 1e-12);

    std::vector<ObjectiveContext::Item> items;
    for (std::size_t i = 0; i < 10; ++i) items.push_back({"s" + std::to_string(i), i, 0.0, 0.5, 0});
    const ObjectiveContext symmetric(std::move(items), 1, 0, 1);
    const auto s = approximation_audit(symmetric, 3);
    ASSERT_TRUE(s.ratio.has_value());
    EXPECT_NEAR(*s.ratio, 1.0, 1e-12);
}

TEST(Audit, DegenerateOptimumIsSkipped) {
    const ObjectiveContext ctx({{"neg", 0, -0.5, 0.0, 0}}, 1, 1, 1);
    const auto r = approximation_audit(ctx, 1);
    EXPECT_FALSE(r.ratio.has_value());
    EXPECT_EQ(r.optimal_value, 0.0);
}

TEST(Audit, RandomInstancesMeetTheGuarantee) {
    Rng rng(8);
    double worst = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto ctx = random_instance(rng, 16);
        const auto r = approximation_audit(ctx, 4);
        ASSERT_TRUE(r.ratio.has_value());
        EXPECT_GE(*r.ratio, kGreedyGuarantee - 1e-9);
        EXPECT_LE(*r.ratio, 1.0 + 1e-12);
        worst = std::min(worst, *r.ratio);
    }
    EXPECT_NEAR(kGreedyGuarantee, 1.0 - std::exp(-1.0), 1e-16);
    RecordProperty("worst_ratio", std::to_string(worst));
}

TEST(Audit, DetectsSuboptimalGreedy) {
    // Two clusters, relevance and reward drawn independently.
    Rng rng(9);
    double worst = 1.0;
    for (int trial = 0; trial < 3000 && worst == 1.0; ++trial) {
        std::vector<ObjectiveContext::Item> items;
        for (std::size_t i = 0; i < 6; ++i)
            items.push_back({"w" + std::to_string(i), i, rng.uniform01(), rng.uniform01() * 4.0, rng.uniform_index(2)});
        std::vector<bool> used(2, false);
        for (const auto& it : items) used[it.cluster] = true;
        if (!used[0] || !used[1]) continue;
        const ObjectiveContext ctx(std::move(items), 2, 0.5, 3.0);
        const auto r = approximation_audit(ctx, 2);
        ASSERT_TRUE(r.ratio.has_value());
        EXPECT_GE(*r.ratio, kGreedyGuarantee - 1e-9);
        worst = std::min(worst, *r.ratio);
    }
    EXPECT_LT(worst, 1.0);
}
