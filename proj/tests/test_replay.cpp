#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <random>

#include "navtl/replay/prioritized_replay.hpp"

using namespace navtl;
using namespace navtl::replay;

namespace {

struct Item {
    int id = 0;
};

double chi2_p_value(const std::vector<std::size_t>& counts, const std::vector<double>& expected_prob,
                    std::size_t draws) {
    double stat = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double e = expected_prob[k] * double(draws);
        stat += (double(counts[k]) - e) * (double(counts[k]) - e) / e;
    }
    boost::math::chi_squared dist(double(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST(SumTree, RequiresPowerOfTwo) {
    EXPECT_THROW(SumTree(12), ConfigError);
    EXPECT_NO_THROW(SumTree(1));
    EXPECT_NO_THROW(SumTree(16));
}

TEST(SumTree, SingleUpdateMovesRootByLeafDelta) {
    SumTree t(8);
    for (std::size_t i = 0; i < 8; ++i) t.set(i, 0.5 + double(i));
    const double before = t.total();
    t.set(3, 10.25);
    EXPECT_DOUBLE_EQ(t.total() - before, 10.25 - 3.5);
    EXPECT_DOUBLE_EQ(t.max_leaf(), 10.25);
}

TEST(SumTree, RootMatchesLeafSumAfterManyUpdates) {
    SumTree t(1024);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> slot(0, 1023);
    std::uniform_real_distribution<double> p(0.0, 5.0);
    for (int k = 0; k < 100000; ++k) t.set(slot(rng), p(rng));
    double direct = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < 1024; ++i) {
        direct += t.leaf(i);
        mx = std::max(mx, t.leaf(i));
    }
    EXPECT_NEAR(t.total(), direct, 1e-4);
    EXPECT_LE(t.max_internal_error(), 1e-12);
    EXPECT_EQ(t.max_leaf(), mx);
}

TEST(SumTree, FindSkipsEmptyLeaves) {
    SumTree t(8);
    t.set(0, 1.0);
    t.set(1, 2.0);
    EXPECT_EQ(t.find(0.5), 0u);
    EXPECT_EQ(t.find(1.5), 1u);
    EXPECT_EQ(t.find(3.0), 1u);  // at or past the total stays on a filled leaf
    EXPECT_EQ(t.find(100.0), 1u);
}

TEST(Replay, FirstPushHasUnitPriority) {
    PrioritizedReplay<Item> r(ReplayConfig{8, 0.6, 0.01});
    r.push({1});
    EXPECT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r.total_priority(), 1.0);
}

TEST(Replay, NewItemsTakeCurrentMaxPriority) {
    PrioritizedReplay<Item> r(ReplayConfig{8, 1.0, 0.01});
    r.push({0});
    r.push({1});
    r.update_priorities({0, 1}, {4.99f, 0.49f});
    r.push({2});
    EXPECT_NEAR(r.tree().leaf(2), 5.0, 1e-6);
    // exact proportion of the new item by root arithmetic: 5 / (5 + 0.5 + 5)
    EXPECT_NEAR(r.tree().leaf(2) / r.total_priority(), 5.0 / 10.5, 1e-6);
}

TEST(Replay, FifoOverwriteAtCapacity) {
    PrioritizedReplay<Item> r(ReplayConfig{8, 0.6, 0.01});
    for (int k = 0; k < 8 + 3; ++k) r.push({k});
    EXPECT_EQ(r.size(), 8u);
    std::vector<int> held;
    for (std::size_t s = 0; s < 8; ++s) held.push_back(r.at(s).id);
    for (int old : {0, 1, 2}) EXPECT_EQ(std::count(held.begin(), held.end(), old), 0);
    for (int k = 3; k < 11; ++k) EXPECT_EQ(std::count(held.begin(), held.end(), k), 1);
}

TEST(Replay, TdZeroGivesEpsilonPriority) {
    PrioritizedReplay<Item> r(ReplayConfig{4, 0.6, 0.01});
    r.push({0});
    r.update_priorities({0}, {0.0f});
    EXPECT_NEAR(r.tree().leaf(0), std::pow(0.01, 0.6), 1e-12);
}

TEST(Replay, EqualPrioritiesSampleUniformly) {
    PrioritizedReplay<Item> r(ReplayConfig{16, 0.6, 0.01});
    for (int k = 0; k < 16; ++k) r.push({k});
    std::mt19937_64 rng(12);
    std::vector<std::size_t> counts(16, 0);
    const std::size_t draws = 100000;
    for (std::size_t d = 0; d < draws / 4; ++d)
        for (auto idx : r.sample(4, 0.4, rng).indices) ++counts[idx];
    EXPECT_GT(chi2_p_value(counts, std::vector<double>(16, 1.0 / 16.0), draws), 0.01);
}

TEST(Replay, ThreeToOnePrioritiesSampleThreeQuarters) {
    PrioritizedReplay<Item> r(ReplayConfig{2, 1.0, 0.01});
    r.push({0});
    r.push({1});
    r.update_priorities({0, 1}, {2.99f, 0.99f});
    ASSERT_NEAR(r.tree().leaf(0) / r.total_priority(), 0.75, 1e-6);
    std::mt19937_64 rng(5);
    std::size_t first = 0;
    const std::size_t draws = 100000;
    for (std::size_t d = 0; d < draws; ++d) first += r.sample(1, 0.4, rng).indices[0] == 0;
    EXPECT_NEAR(double(first) / double(draws), 0.75, 0.01);
}

TEST(Replay, SkewedPrioritiesWithinThreeSigma) {
    PrioritizedReplay<Item> r(ReplayConfig{8, 1.0, 0.01});
    for (int k = 0; k < 8; ++k) r.push({k});
    std::vector<float> td{0.99f, 1.99f, 2.99f, 3.99f, 4.99f, 5.99f, 6.99f, 7.99f};
    r.update_priorities({0, 1, 2, 3, 4, 5, 6, 7}, td);
    std::mt19937_64 rng(77);
    std::vector<std::size_t> counts(8, 0);
    const std::size_t draws = 100000;
    for (std::size_t d = 0; d < draws / 8; ++d)
        for (auto idx : r.sample(8, 1.0, rng).indices) ++counts[idx];
    for (std::size_t k = 0; k < 8; ++k) {
        const double p = r.tree().leaf(k) / r.total_priority();
        const double sigma = std::sqrt(double(draws) * p * (1 - p));
        EXPECT_NEAR(double(counts[k]), p * double(draws), 3 * sigma) << k;
    }
}

TEST(Replay, ImportanceWeights) {
    PrioritizedReplay<Item> r(ReplayConfig{4, 1.0, 0.01});
    for (int k = 0; k < 4; ++k) r.push({k});
    r.update_priorities({0, 1, 2, 3}, {0.99f, 1.99f, 2.99f, 3.99f});
    std::mt19937_64 rng(1);
    auto b0 = r.sample(4, 0.0, rng);
    for (float w : b0.weights) EXPECT_EQ(w, 1.0f);
    auto b = r.sample(4, 1.0, rng);
    // (count * P)^-1 normalized by the batch max: lowest priority gets weight 1
    double pmin = 1e9;
    for (auto idx : b.indices) pmin = std::min(pmin, r.tree().leaf(idx));
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(b.weights[k], pmin / r.tree().leaf(b.indices[k]), 1e-6);
    EXPECT_EQ(*std::max_element(b.weights.begin(), b.weights.end()), 1.0f);
}

TEST(Replay, UnderfilledSampleIsAnError) {
    PrioritizedReplay<Item> r(ReplayConfig{8, 0.6, 0.01});
    r.push({0});
    std::mt19937_64 rng(1);
    EXPECT_THROW(r.sample(2, 0.4, rng), ConfigError);
}

TEST(Replay, BetaAnneal) {
    EXPECT_DOUBLE_EQ(beta_at(0, 100), 0.4);
    EXPECT_DOUBLE_EQ(beta_at(50, 100), 0.7);
    EXPECT_DOUBLE_EQ(beta_at(100, 100), 1.0);
    EXPECT_DOUBLE_EQ(beta_at(500, 100), 1.0);
}
