#include <gtest/gtest.h>

#include "json.hpp"

#include "lem/artifacts.hpp"
#include "lem/config.hpp"
#include "test_support.hpp"

namespace {

using lem::Layer;
using testing_support::scratch_dir;

TEST(FormatNumber, RoundTripsShortest) {
    EXPECT_EQ(lem::format_number(0.1), "0.1");
    EXPECT_EQ(lem::format_number(90.0), "90");
    const double x = 1.0 / 3.0;
    EXPECT_EQ(std::stod(lem::format_number(x)), x);
}

TEST(TradeLog, LineRoundTrips) {
    const lem::Trade t{"alice", "bob", 123.456789, 1.0 / 7.0, Layer::p2p, 13};
    const auto line = lem::trade_json_line(t);
    EXPECT_EQ(line.find("{\"step\":13,\"buyer\":\"alice\""), 0u) << line;
    const auto back = lem::parse_trade_line(line);
    EXPECT_EQ(back.buyer_id, t.buyer_id);
    EXPECT_EQ(back.seller_id, t.seller_id);
    EXPECT_EQ(back.price, t.price);
    EXPECT_EQ(back.quantity, t.quantity);
    EXPECT_EQ(back.layer, t.layer);
    EXPECT_EQ(back.step, t.step);
}

TEST(TradeLog, RejectsMalformedLines) {
    EXPECT_THROW(lem::parse_trade_line("not json"), std::invalid_argument);
    EXPECT_THROW(lem::parse_trade_line("{\"step\":1}"), std::invalid_argument);
    EXPECT_THROW(lem::parse_trade_line(
                     R"({"step":1,"buyer":"a","seller":"b","price":1,"quantity":-2,"layer":"p2p"})"),
                 std::invalid_argument);
    EXPECT_THROW(lem::parse_trade_line(
                     R"({"step":1,"buyer":"a","seller":"b","price":1,"quantity":2,"layer":"barter"})"),
                 std::invalid_argument);
}

TEST(TradeLog, ReaderReportsLineNumber) {
    const auto dir = scratch_dir("trade_log");
    const auto path = dir / "trades.jsonl";
    {
        std::ofstream out(path);
        out << lem::trade_json_line({"a", "b", 90, 5, Layer::p2p, 0}) << "\n\n";
        out << "{broken\n";
    }
    try {
        lem::read_trade_log(path);
        FAIL() << "expected DataError";
    } catch (const lem::DataError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    EXPECT_THROW(lem::read_trade_log(dir / "missing.jsonl"), lem::ConfigError);
}

TEST(KpiCsv, RoundTripsExactly) {
    const auto dir = scratch_dir("kpi_csv");
    lem::KpiRecord k;
    k.social_welfare = 1234.5678901234;
    k.imbalance = 1.0 / 3.0;
    k.grid_balance = -17.25;
    std::string text = lem::kpi_csv_header() + "\n" + lem::kpi_csv_row(0, k) + "\n" +
                       lem::kpi_csv_row(1, {}) + "\n";
    lem::write_text(dir / "kpis.csv", text);
    const auto rows = lem::read_kpi_csv(dir / "kpis.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].first, 0);
    EXPECT_EQ(rows[0].second.values(), k.values());
    EXPECT_EQ(rows[1].second.values(), lem::KpiRecord{}.values());
}

TEST(Network, EmptyLogGivesEmptyGraph) {
    const auto net = lem::build_network({}, false);
    EXPECT_TRUE(net.nodes.empty());
    EXPECT_TRUE(net.weights.empty());
    EXPECT_EQ(net.total_weight, 0.0);
    const auto json = nlohmann::json::parse(lem::network_json(net));
    EXPECT_TRUE(json.at("edges").empty());
}

TEST(Network, AggregatesSellerToBuyerWeights) {
    const std::vector<lem::Trade> trades{{"B", "A", 90, 5, Layer::p2p, 0},
                                         {"B", "A", 95, 7, Layer::p2p, 3}};
    const auto net = lem::build_network(trades, false);
    ASSERT_EQ(net.weights.size(), 1u);
    EXPECT_EQ(net.weights.at({"A", "B"}), 12.0);
    EXPECT_EQ(net.trade_counts.at({"A", "B"}), 2);
    EXPECT_NE(lem::network_dot(net).find("\"A\" -> \"B\""), std::string::npos);
}

TEST(Network, P2POnlyDropsDsoTrades) {
    const std::vector<lem::Trade> trades{{"B", "A", 90, 5, Layer::p2p, 0},
                                         {"B", "DSO", 180, 7, Layer::dso_buy, 0},
                                         {"DSO", "A", 60, 2, Layer::dso_sell, 0}};
    const auto all = lem::build_network(trades, false);
    const auto p2p = lem::build_network(trades, true);
    EXPECT_EQ(all.weights.size(), 3u);
    EXPECT_EQ(all.total_weight, 14.0);
    EXPECT_EQ(p2p.weights.size(), 1u);
    EXPECT_FALSE(p2p.nodes.contains("DSO"));
}

TEST(Summary, PopulationStatistics) {
    const auto s = lem::summarize(std::vector<double>{1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(1.25));
    EXPECT_EQ(s.min, 1.0);
    EXPECT_EQ(s.max, 4.0);
    const auto csv = lem::summary_csv(std::vector<lem::KpiRecord>(3), std::vector<double>{1.0});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,mean,std,min,max");
    EXPECT_NE(csv.find("\nepisode_reward,1,0,1,1"), std::string::npos) << csv;
}

TEST(Checkpoint, RoundTripsState) {
    lem::Checkpoint cp;
    cp.config.population = 8;
    cp.config.elite_fraction = 0.375;
    cp.config.fitness = lem::FitnessMode::individual;
    cp.config.focal_agent = 3;
    cp.state.mean = {0.1, -1.0 / 3.0};
    cp.state.stddev = {0.5, 1e-300};
    cp.state.iteration = 2;
    cp.state.curve.push_back({0, -1.5, -1.0, -0.5, 0.4, 1});
    cp.state.best_params = {1.0, 2.0};
    cp.state.best_fitness = -0.5;
    cp.state.elites = {{1.0, 2.0}};
    cp.state.elite_fitness = {-0.5};
    cp.config_hash = "0123456789abcdef";
    const auto back = lem::parse_checkpoint(lem::checkpoint_json(cp));
    EXPECT_EQ(back.config.population, 8);
    EXPECT_EQ(back.config.elite_fraction, 0.375);
    EXPECT_EQ(back.config.fitness, lem::FitnessMode::individual);
    EXPECT_EQ(back.config.focal_agent, 3u);
    EXPECT_EQ(back.state.mean, cp.state.mean);
    EXPECT_EQ(back.state.stddev, cp.state.stddev);
    EXPECT_EQ(back.state.iteration, 2);
    ASSERT_EQ(back.state.curve.size(), 1u);
    EXPECT_EQ(back.state.curve[0].discarded, 1);
    EXPECT_EQ(back.state.elites, cp.state.elites);
    EXPECT_EQ(back.config_hash, cp.config_hash);
}

TEST(Checkpoint, MalformedTextIsDataError) {
    EXPECT_THROW(lem::parse_checkpoint("{}"), lem::DataError);
    EXPECT_THROW(lem::parse_checkpoint("garbage"), lem::DataError);
}

TEST(LearningCurve, OneRowPerIteration) {
    std::vector<lem::CemIteration> curve(3);
    const auto csv = lem::learning_curve_csv(curve);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "iteration,mean_fitness,elite_mean,best_fitness,mean_std,discarded");
}

TEST(Manifest, CarriesRunIdentity) {
    lem::RunManifest m;
    m.config_hash = "abc";
    m.seed = 9;
    m.policy = "zi";
    m.artifacts = {"trades.jsonl"};
    const auto j = nlohmann::json::parse(lem::manifest_json(m));
    EXPECT_EQ(j.at("seed"), 9);
    EXPECT_EQ(j.at("engine_version"), "0.1.0");
    EXPECT_EQ(j.at("artifacts").size(), 1u);
}

}  // namespace
