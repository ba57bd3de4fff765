#include <gtest/gtest.h>

#include "lem/reward.hpp"
#include "lem/rng.hpp"
#include "oracles.hpp"

namespace {

using lem::Layer;

lem::AgentStepRecord record(const std::string& id, double gen, double dem) {
    lem::AgentStepRecord r;
    r.agent_id = id;
    r.node_id = "n";
    r.capacity_kw = 100.0;
    r.generation_kw = gen;
    r.demand_kw = dem;
    r.flex = {50.0, 50.0};
    return r;
}

lem::StepLedger ledger_with(std::vector<lem::AgentStepRecord> agents, std::vector<lem::Trade> trades,
                            double grid_balance) {
    lem::StepLedger l;
    l.agents = std::move(agents);
    l.trades = std::move(trades);
    l.grid_balance = grid_balance;
    l.feed_in = 60.0;
    l.utility = 180.0;
    return l;
}

lem::AgentOutcome outcome_of(const lem::TradeTotals& t) {
    lem::AgentOutcome o;
    o.trades = t;
    o.available_flex_kwh = 100.0;
    o.capacity_kw = 100.0;
    return o;
}

TEST(Weights, DefaultsValidate) { EXPECT_NO_THROW(lem::validate(lem::RewardWeights{})); }

TEST(Weights, RejectBadGroups) {
    lem::RewardWeights w;
    w.base.economic = 0.5;
    EXPECT_THROW(lem::validate(w), std::invalid_argument);
    w = {};
    w.cooperation.self_consumption = -1.0 / 3.0;
    w.cooperation.coordination_score = 1.0;
    EXPECT_THROW(lem::validate(w), std::invalid_argument);
    w = {};
    w.dso_penalty_coeff = -0.1;
    EXPECT_THROW(lem::validate(w), std::invalid_argument);
}

TEST(ComposeReward, WorkedExample) {
    lem::BaseComponents b;
    b.base = 100.0;
    const auto r = lem::compose_reward(b, 0.5, 0.2, {10.0, 5.0});
    EXPECT_DOUBLE_EQ(r.total, 95.0);
    EXPECT_EQ(r.total, r.recompose());
}

TEST(ComposeReward, ZeroCooperationRemovesBonus) {
    lem::BaseComponents b;
    b.base = 42.0;
    EXPECT_DOUBLE_EQ(lem::compose_reward(b, 0.0, 0.9, {2.0, 1.0}).total, 39.0);
}

TEST(ComposeReward, NegativeContributionLowersTotal) {
    lem::BaseComponents b;
    b.base = 42.0;
    EXPECT_LT(lem::compose_reward(b, 0.5, -0.3, {2.0, 1.0}).total, 39.0);
}

TEST(ComposeReward, MonotoneInCooperationForPositiveBaseAndContribution) {
    lem::Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        lem::BaseComponents b;
        b.base = rng.uniform(0.0, 5.0);
        const double contrib = rng.uniform(0.0, 1.0);
        const double lo = rng.uniform();
        const double hi = lo + rng.uniform() * (1.0 - lo);
        const lem::Penalties pen{rng.uniform(), rng.uniform()};
        ASSERT_LE(lem::compose_reward(b, lo, contrib, pen).total,
                  lem::compose_reward(b, hi, contrib, pen).total);
    }
}

TEST(Penalties, Examples) {
    lem::RewardWeights w;
    w.dso_penalty_coeff = 1.0;
    const auto none = lem::penalties(outcome_of({}), 0.0, 1800.0, w);
    EXPECT_EQ(none.dso, 0.0);
    EXPECT_EQ(none.unmet, 0.0);
    lem::TradeTotals t;
    t.dso_bought = 10.0;
    EXPECT_DOUBLE_EQ(lem::penalties(outcome_of(t), 0.0, 1800.0, w).dso, 10.0);
    EXPECT_DOUBLE_EQ(lem::penalties(outcome_of(t), -180.0, 1800.0, w).dso, 11.0);
    auto o = outcome_of({});
    o.unmet_kwh = 5.0;
    EXPECT_DOUBLE_EQ(lem::penalties(o, 0.0, 1800.0, w).unmet, 5.0 * w.unmet_penalty_coeff);
}

TEST(CooperationFactor, Examples) {
    lem::KpiRecord k;
    k.self_consumption = k.coordination_score = k.coordination_convergence = 1.0;
    EXPECT_DOUBLE_EQ(lem::cooperation_factor(k, {}), 1.0);
    k.self_consumption = k.coordination_score = k.coordination_convergence = 0.0;
    EXPECT_EQ(lem::cooperation_factor(k, {}), 0.0);
    k.self_consumption = 0.6;
    k.coordination_score = 0.9;
    k.coordination_convergence = 0.3;
    EXPECT_NEAR(lem::cooperation_factor(k, {}), 0.6, 1e-15);
}

TEST(ContributionFactor, IdleAgentHasNoTradeTerms) {
    const auto l = ledger_with({record("a", 5, 5), record("b", 5, 5)},
                               {{"b", "x", 90, 4, Layer::p2p, 0}}, 0.0);
    const auto c = lem::contribution_factor("a", l, {});
    EXPECT_EQ(c.imbalance, 0.0);
    EXPECT_EQ(c.volume_share, 0.0);
    EXPECT_EQ(c.price_efficiency, 0.0);
}

TEST(ContributionFactor, CounterfactualRemovalOfBuy) {
    // The 50 kWh buy brings B from -60 to -10.
    const auto l = ledger_with({record("a", 0, 50), record("b", 0, 10)},
                               {{"a", std::string(lem::kDsoId), 180, 50, Layer::dso_buy, 0}},
                               -10.0);
    ASSERT_EQ(oracle::balance_from_ledger(l), -10.0);
    ASSERT_EQ(oracle::balance_from_ledger(l, "a"), -60.0);
    EXPECT_DOUBLE_EQ(lem::contribution_factor("a", l, {}).imbalance, 50.0 / 1800.0);
}

TEST(ContributionFactor, SoleTraderTakesWholeVolume) {
    const auto l = ledger_with({record("a", 0, 5), record("b", 5, 0)},
                               {{"a", "b", 120, 5, Layer::p2p, 0}}, 0.0);
    EXPECT_EQ(lem::contribution_factor("a", l, {}).volume_share, 1.0);
    EXPECT_EQ(lem::contribution_factor("b", l, {}).volume_share, 1.0);
}

TEST(ContributionFactor, UnknownAgentThrows) {
    const auto l = ledger_with({record("a", 0, 0)}, {}, 0.0);
    EXPECT_THROW(lem::contribution_factor("ghost", l, {}), std::invalid_argument);
}

TEST(ContributionFactor, ImbalanceTermMatchesLedgerRecomputation) {
    lem::Rng rng(2718);
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<lem::AgentStepRecord> agents;
        for (const auto& id : ids)
            agents.push_back(record(id, rng.uniform(0, 80), rng.uniform(0, 80)));
        std::vector<lem::Trade> trades;
        for (int k = 0; k < 5; ++k) {
            const auto b = ids[rng.below(4)];
            auto s = ids[rng.below(4)];
            if (s == b) s = std::string(lem::kDsoId);
            trades.push_back({b, s, 100, rng.uniform(0, 40), Layer::p2p, 0});
        }
        trades.push_back({std::string(lem::kDsoId), ids[rng.below(4)], 60, rng.uniform(0, 40),
                          Layer::dso_sell, 0});
        auto l = ledger_with(agents, trades, 0.0);
        l.grid_balance = oracle::balance_from_ledger(l);
        for (const auto& id : ids) {
            const double expected =
                (std::abs(oracle::balance_from_ledger(l, id)) - std::abs(l.grid_balance)) / 1800.0;
            ASSERT_NEAR(lem::contribution_factor(id, l, {}).imbalance, expected, 1e-12);
        }
    }
}

TEST(ContributionFactor, FactorStaysInUnitBand) {
    lem::Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto l = ledger_with(
            {record("a", 0, 0), record("b", 0, 0)},
            {{"a", "b", rng.uniform(20, 600), rng.uniform(0, 5000), Layer::p2p, 0}},
            rng.uniform(-5000, 5000));
        const auto c = lem::contribution_factor("a", l, {});
        ASSERT_GE(c.factor, -1.0);
        ASSERT_LE(c.factor, 1.0);
    }
}

TEST(BaseReward, NoTradesLeavesTradeTermsZero) {
    const auto c = lem::base_reward(outcome_of({}), {0.0, 1800, 60, 180, 0, 580}, {});
    EXPECT_EQ(c.economic, 0.0);
    EXPECT_EQ(c.grid_balance_term, 0.0);
    EXPECT_EQ(c.resource_alloc, 0.0);
    EXPECT_EQ(c.trading, 0.0);
    EXPECT_EQ(c.stability, 1.0);
}

TEST(BaseReward, SellingHelpsDeficitAndHurtsSurplus) {
    lem::TradeTotals t;
    t.p2p_sold = 10.0;
    t.p2p_sell_revenue = 1000.0;
    const auto deficit = lem::base_reward(outcome_of(t), {-50, 1800, 60, 180, 0, 580}, {});
    const auto surplus = lem::base_reward(outcome_of(t), {50, 1800, 60, 180, 0, 580}, {});
    EXPECT_GT(deficit.grid_balance_term, 0.0);
    EXPECT_LT(surplus.grid_balance_term, 0.0);
}

TEST(BaseReward, P2PVolumeOutscoresDsoVolume) {
    lem::TradeTotals p2p;
    p2p.p2p_bought = 10.0;
    p2p.p2p_buy_cost = 1200.0;
    lem::TradeTotals dso;
    dso.dso_bought = 10.0;
    dso.dso_buy_cost = 1800.0;
    const lem::MarketContext ctx{0, 1800, 60, 180, 0, 580};
    EXPECT_GT(lem::base_reward(outcome_of(p2p), ctx, {}).trading,
              lem::base_reward(outcome_of(dso), ctx, {}).trading);
}

TEST(BaseReward, EconomicGainMeasuredAgainstTariff) {
    lem::TradeTotals t;
    t.p2p_bought = 10.0;
    t.p2p_buy_cost = 1200.0;  // 60 below utility per kWh
    const auto c = lem::base_reward(outcome_of(t), {0, 1800, 60, 180, 0, 580}, {});
    EXPECT_DOUBLE_EQ(c.economic, 600.0 / (120.0 * 100.0));
}

TEST(ComputeReward, BreakdownRecomposesToTotal) {
    lem::Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = record("a", rng.uniform(0, 50), rng.uniform(0, 50));
        a.unmet_kwh = rng.uniform(0, 5);
        const auto l = ledger_with(
            {a, record("b", 10, 0)},
            {{"a", "b", rng.uniform(60, 180), rng.uniform(0, 20), Layer::p2p, 0},
             {"a", std::string(lem::kDsoId), 180, rng.uniform(0, 20), Layer::dso_buy, 0}},
            rng.uniform(-100, 100));
        lem::KpiRecord k;
        k.self_consumption = rng.uniform();
        k.coordination_score = rng.uniform();
        const auto r = lem::compute_reward("a", l, k, {});
        ASSERT_EQ(r.total, r.recompose());
        ASSERT_GT(r.dso_penalty, 0.0);
    }
}

}  // namespace
