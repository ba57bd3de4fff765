#include <gtest/gtest.h>

#include "lem/grid.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using Injection = std::map<std::string, double, std::less<>>;

lem::GridTopology line_tree(double capacity) {
    // r -> a -> b, a -> c
    return lem::GridTopology({{"r", "a", capacity}, {"a", "b", capacity}, {"a", "c", capacity}});
}

TEST(Topology, ShippedFeederIsARadialTree) {
    const auto& topo = testing_support::default_scenario().topology;
    EXPECT_EQ(topo.root(), "sourcebus");
    EXPECT_EQ(topo.nodes().size(), topo.edges().size() + 1);
    EXPECT_EQ(topo.nodes().size(), 35u);
    for (const auto& node : {"800", "840", "890", "844", "816", "830", "848", "860"})
        EXPECT_TRUE(topo.contains(node)) << node;
}

TEST(Topology, RejectsNonTrees) {
    EXPECT_THROW(lem::GridTopology({{"r", "a", 1}, {"a", "r", 1}}), std::invalid_argument);
    EXPECT_THROW(lem::GridTopology({{"r", "a", 1}, {"x", "a", 1}}), std::invalid_argument);
    EXPECT_THROW(lem::GridTopology({{"r", "a", 1}, {"x", "y", 1}}), std::invalid_argument);
    EXPECT_THROW(lem::GridTopology({{"r", "a", 0}}), std::invalid_argument);
    EXPECT_THROW(lem::GridTopology({}), std::invalid_argument);
}

TEST(Topology, UnknownNodeThrows) {
    EXPECT_THROW(line_tree(1).node_index("zz"), std::invalid_argument);
}

TEST(EdgeFlows, ZeroInjectionsGiveZeroFlows) {
    const auto topo = line_tree(1800);
    const auto f = lem::edge_flows(topo, {{"b", 0.0}, {"c", 0.0}});
    for (double x : f.edge_flow) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(f.congestion_mean, 0.0);
}

TEST(EdgeFlows, LeafInjectionLoadsItsRootPath) {
    const auto topo = line_tree(1800);
    const auto f = lem::edge_flows(topo, {{"b", 600.0}});
    EXPECT_DOUBLE_EQ(f.edge_flow[0], 600.0);  // r-a
    EXPECT_DOUBLE_EQ(f.edge_flow[1], 600.0);  // a-b
    EXPECT_DOUBLE_EQ(f.edge_flow[2], 0.0);    // a-c
    EXPECT_DOUBLE_EQ(f.max_edge_utilization, 1.0 / 3.0);
}

TEST(EdgeFlows, SiblingsCancelOnSharedEdge) {
    const auto topo = line_tree(1800);
    const auto f = lem::edge_flows(topo, {{"b", 42.0}, {"c", -42.0}});
    EXPECT_EQ(f.edge_flow[0], 0.0);
    EXPECT_DOUBLE_EQ(f.edge_flow[1], 42.0);
    EXPECT_DOUBLE_EQ(f.edge_flow[2], -42.0);
}

TEST(EdgeFlows, UnknownNodeThrows) {
    EXPECT_THROW(lem::edge_flows(line_tree(1), {{"nowhere", 1.0}}), std::invalid_argument);
}

TEST(EdgeFlows, MatchesSubtreeOracleOnShippedFeeder) {
    const auto& topo = testing_support::default_scenario().topology;
    lem::Rng rng(34);
    for (int trial = 0; trial < 200; ++trial) {
        Injection inj;
        std::map<std::string, double> plain;
        for (const auto& node : topo.nodes()) {
            if (rng.uniform() < 0.4) continue;
            const double kw = rng.uniform(-300.0, 300.0);
            inj[node] = kw;
            plain[node] = kw;
        }
        const auto f = lem::edge_flows(topo, inj);
        const auto expected = oracle::subtree_flows(topo.edges(), plain);
        ASSERT_EQ(f.edge_flow.size(), expected.size());
        for (std::size_t e = 0; e < expected.size(); ++e) EXPECT_EQ(f.edge_flow[e], expected[e]);
    }
}

TEST(Congestion, MeanUtilizationExamples) {
    const auto topo = line_tree(100);
    lem::FlowResult f;
    f.edge_flow = {0.0, 0.0, 0.0};
    EXPECT_EQ(lem::congestion(f, topo), 0.0);
    f.edge_flow = {50.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(lem::congestion(f, topo), 1.0 / 6.0);
    f.edge_flow = {100.0, -100.0, 100.0};
    EXPECT_DOUBLE_EQ(lem::congestion(f, topo), 1.0);
    f.edge_flow = {500.0, 500.0, 500.0};
    EXPECT_DOUBLE_EQ(lem::congestion(f, topo), 1.0);
}

TEST(Congestion, InvariantUnderJointScaling) {
    lem::Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const double k = rng.uniform(0.1, 10.0);
        const auto topo = line_tree(300);
        const auto scaled = line_tree(300 * k);
        lem::FlowResult f;
        lem::FlowResult g;
        for (int e = 0; e < 3; ++e) {
            const double x = rng.uniform(-200, 200);
            f.edge_flow.push_back(x);
            g.edge_flow.push_back(x * k);
        }
        EXPECT_NEAR(lem::congestion(f, topo), lem::congestion(g, scaled), 1e-12);
    }
}

TEST(GridBalance, Examples) {
    EXPECT_EQ(lem::grid_balance(std::vector<lem::EnergyPosition>{{5, 5, 0, 0}, {3, 3, 0, 0}}), 0.0);
    EXPECT_DOUBLE_EQ(
        lem::grid_balance(std::vector<lem::EnergyPosition>{{10, 5, 0, 3}, {0, 4, 3, 0}}), 1.0);
    EXPECT_EQ(lem::grid_balance(std::vector<lem::EnergyPosition>{{8, 2, 0, 6}, {2, 8, 6, 0}}), 0.0);
}

}  // namespace
