#include "divret/random.hpp"
#include "divret/stable_json.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using divret::dump_stable;
using divret::Rng;

TEST(Rng, EngineMatchesReferenceStream) {
    // The 10000th output of mt19937_64 from its default seed is fixed by the C++ standard.
    Rng rng(5489);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = rng.next();
    EXPECT_EQ(x, 9981545732273789042ull);
    EXPECT_EQ(divret::rng_identity(), "mt19937_64/v1");
}

TEST(Rng, SameSeedSameStream) {
    Rng a(123), b(123), c(124);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.uniform_index(1000);
        EXPECT_EQ(x, b.uniform_index(1000));
        differs |= x != c.uniform_index(1000);
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformIndexIsInRangeAndBalanced) {
    Rng rng(1);
    EXPECT_THROW(rng.uniform_index(0), std::invalid_argument);
    EXPECT_EQ(rng.uniform_index(1), 0u);
    constexpr int kBins = 6, kDraws = 60000;
    std::vector<int> counts(kBins);
    for (int i = 0; i < kDraws; ++i) {
        const auto v = rng.uniform_index(kBins);
        ASSERT_LT(v, static_cast<std::uint64_t>(kBins));
        ++counts[v];
    }
    double chi2 = 0;
    const double expected = static_cast<double>(kDraws) / kBins;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 20.5);  // 5 degrees of freedom, p ~ 0.001
    const std::uint64_t huge = (std::uint64_t{1} << 63) + 1;
    for (int i = 0; i < 100; ++i) EXPECT_LT(rng.uniform_index(huge), huge);
}

TEST(Rng, UniformAndNormalMoments) {
    Rng rng(2);
    constexpr int kDraws = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < kDraws; ++i) {
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        ASSERT_TRUE(std::isfinite(z));
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / kDraws, 0.5, 0.005);
    EXPECT_NEAR(sn / kDraws, 0.0, 0.01);
    EXPECT_NEAR(sn2 / kDraws, 1.0, 0.02);
}

TEST(StableJson, SortedKeysAndFixedPrecision) {
    nlohmann::json j;
    j["zeta"] = 1.0 / 3.0;
    j["alpha"] = {{"b", 2}, {"a", "text"}};
    j["mid"] = {0.1, -0.0, true, nullptr};
    EXPECT_EQ(dump_stable(j), R"({"alpha":{"a":"text","b":2},"mid":[0.1,0,true,null],"zeta":0.333333333})");
    EXPECT_EQ(dump_stable(nlohmann::json(0.1), 17), "0.10000000000000001");
}

TEST(StableJson, NonFiniteBecomesNull) {
    const nlohmann::json j = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()};
    EXPECT_EQ(dump_stable(j), "[null,null]");
}

TEST(StableJson, SeventeenDigitsRoundTrip) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double d = (rng.uniform01() - 0.5) * std::pow(10.0, static_cast<double>(rng.uniform_index(20)) - 10.0);
        const auto back = nlohmann::json::parse(dump_stable(nlohmann::json(d), 17)).get<double>();
        EXPECT_EQ(back, d);
    }
}
