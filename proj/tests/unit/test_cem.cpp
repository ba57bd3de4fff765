#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lem/cem.hpp"
#include "test_support.hpp"

namespace {

double neg_sq_dist(const std::vector<double>& x) {
    double d = 0.0;
    for (double v : x) d += (v - 3.0) * (v - 3.0);
    return -d;
}

lem::CemConfig small_config() {
    lem::CemConfig c;
    c.population = 8;
    c.iterations = 3;
    c.seed = 5;
    return c;
}

TEST(CemConfig, EliteCountRoundsAndFloorsAtOne) {
    lem::CemConfig c;
    EXPECT_EQ(c.elite_count(), 8);
    c.elite_fraction = 0.01;
    EXPECT_EQ(c.elite_count(), 1);
    c.elite_fraction = 1.0;
    EXPECT_EQ(c.elite_count(), 32);
}

TEST(CemConfig, ValidationRejectsBadFields) {
    lem::CemConfig c;
    c.elite_fraction = 0.0;
    EXPECT_THROW(lem::validate(c), std::invalid_argument);
    c = {};
    c.elite_fraction = 1.5;
    EXPECT_THROW(lem::validate(c), std::invalid_argument);
    c = {};
    c.population = 2;
    EXPECT_THROW(lem::validate(c), std::invalid_argument);
    c = {};
    c.initial_std = -1.0;
    EXPECT_THROW(lem::validate(c), std::invalid_argument);
}

TEST(CemOptimize, FullEliteFractionTracksPopulationMean) {
    auto c = small_config();
    c.elite_fraction = 1.0;
    c.iterations = 1;
    std::vector<std::vector<double>> seen;
    const auto state = lem::cem_optimize(
        4, c, [&](const std::vector<double>& x) {
            seen.push_back(x);
            return neg_sq_dist(x);
        });
    ASSERT_EQ(seen.size(), 8u);
    for (std::size_t j = 0; j < 4; ++j) {
        double m = 0.0;
        for (const auto& x : seen) m += x[j];
        EXPECT_NEAR(state.mean[j], m / 8.0, 1e-12);
    }
}

TEST(CemOptimize, ZeroSpreadGivesIdenticalCandidatesAndFlatCurve) {
    auto c = small_config();
    c.initial_std = 0.0;
    c.iterations = 4;
    const auto state = lem::cem_optimize(3, c, neg_sq_dist);
    ASSERT_EQ(state.curve.size(), 4u);
    for (const auto& it : state.curve) {
        EXPECT_EQ(it.mean_fitness, state.curve.front().mean_fitness);
        EXPECT_EQ(it.best_fitness, it.mean_fitness);
        EXPECT_EQ(it.mean_std, 0.0);
    }
}

TEST(CemOptimize, ClimbsAQuadratic) {
    auto c = small_config();
    c.population = 32;
    c.iterations = 30;
    c.initial_std = 2.0;
    const auto state = lem::cem_optimize(5, c, neg_sq_dist);
    EXPECT_GT(state.best_fitness, -0.5);
    EXPECT_GT(state.curve.back().elite_mean, state.curve.front().elite_mean);
}

TEST(CemOptimize, EliteMeanNeverDecreasesWithElitism) {
    auto c = small_config();
    c.population = 16;
    c.iterations = 15;
    const auto state = lem::cem_optimize(6, c, neg_sq_dist);
    for (std::size_t i = 1; i < state.curve.size(); ++i)
        EXPECT_GE(state.curve[i].elite_mean, state.curve[i - 1].elite_mean) << i;
}

TEST(CemOptimize, DiscardsNonFiniteFitness) {
    auto c = small_config();
    c.iterations = 2;
    const auto state = lem::cem_optimize(2, c, [](const std::vector<double>& x) {
        return x[0] > 0.0 ? std::numeric_limits<double>::quiet_NaN() : neg_sq_dist(x);
    });
    int discarded = 0;
    for (const auto& it : state.curve) {
        discarded += it.discarded;
        EXPECT_TRUE(std::isfinite(it.mean_fitness));
    }
    EXPECT_GT(discarded, 0);
    EXPECT_TRUE(std::isfinite(state.best_fitness));
    EXPECT_LE(state.best_params[0], 0.0);
}

TEST(CemOptimize, AllNonFiniteThrows) {
    EXPECT_THROW(lem::cem_optimize(2, small_config(),
                                   [](const std::vector<double>&) {
                                       return std::numeric_limits<double>::infinity();
                                   }),
                 std::runtime_error);
}

TEST(CemOptimize, ThreadCountDoesNotChangeResult) {
    auto c = small_config();
    c.iterations = 5;
    const auto a = lem::cem_optimize(4, c, neg_sq_dist);
    c.threads = 3;
    const auto b = lem::cem_optimize(4, c, neg_sq_dist);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.stddev, b.stddev);
    EXPECT_EQ(a.best_params, b.best_params);
}

TEST(CemOptimize, ResumeContinuesBitExactly) {
    auto c = small_config();
    c.iterations = 6;
    const auto full = lem::cem_optimize(4, c, neg_sq_dist);
    c.iterations = 3;
    const auto half = lem::cem_optimize(4, c, neg_sq_dist);
    c.iterations = 6;
    const auto resumed = lem::cem_optimize(4, c, neg_sq_dist, half);
    EXPECT_EQ(resumed.mean, full.mean);
    EXPECT_EQ(resumed.stddev, full.stddev);
    EXPECT_EQ(resumed.best_fitness, full.best_fitness);
    ASSERT_EQ(resumed.curve.size(), full.curve.size());
    for (std::size_t i = 0; i < full.curve.size(); ++i)
        EXPECT_EQ(resumed.curve[i].elite_mean, full.curve[i].elite_mean);
}

TEST(CemTrain, DeterministicOnDefaultScenario) {
    const auto& s = testing_support::default_scenario();
    const auto a = lem::cem_train(s, small_config());
    const auto b = lem::cem_train(s, small_config());
    EXPECT_EQ(a.best_params, b.best_params);
    EXPECT_EQ(a.best_fitness, b.best_fitness);
    ASSERT_EQ(a.curve.size(), 3u);
    EXPECT_EQ(a.mean.size(), lem::LinearPolicy::kParamCount);
    EXPECT_EQ(a.best_fitness, lem::evaluate_params(s, a.best_params, small_config()));
}

TEST(CemTrain, PerAgentPoliciesScaleDimension) {
    lem::CemConfig c;
    c.shared_policy = false;
    EXPECT_EQ(lem::cem_dimension(c, 8), 8 * lem::LinearPolicy::kParamCount);
    const auto set = lem::policy_from_params(
        std::vector<double>(8 * lem::LinearPolicy::kParamCount, 0.0), false);
    EXPECT_FALSE(set.shared());
    EXPECT_THROW(lem::policy_from_params(std::vector<double>(5, 0.0), true),
                 std::invalid_argument);
}

TEST(CemTrain, IndividualFitnessUsesFocalAgent) {
    auto c = small_config();
    c.fitness = lem::FitnessMode::individual;
    c.focal_agent = 99;
    const std::vector<double> zero(lem::LinearPolicy::kParamCount, 0.0);
    EXPECT_THROW(lem::evaluate_params(testing_support::default_scenario(), zero, c),
                 std::invalid_argument);
}

}  // namespace
