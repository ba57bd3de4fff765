#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lem/assets.hpp"
#include "lem/grid.hpp"
#include "lem/market.hpp"

namespace lem {

/// Physical and market outcome of one agent in one step.
struct AgentStepRecord {
    std::string agent_id;
    std::string node_id;
    double capacity_kw = 0.0;
    double generation_kw = 0.0;  // realized
    double demand_kw = 0.0;      // realized
    double forecast_generation_kw = 0.0;
    double forecast_demand_kw = 0.0;
    Flex flex;                          // realized profile against start-of-step battery
    double battery_charged_kwh = 0.0;   // accepted by the battery
    double battery_discharged_kwh = 0.0;
    double unmet_kwh = 0.0;             // residual deficit after the battery
    double spilled_kwh = 0.0;           // residual surplus after the battery
    double undelivered_p2p_kwh = 0.0;   // part of P2P sales the agent failed to back
    double net_injection_kw = 0.0;      // into its grid node, + export
};

struct TradeTotals {
    double p2p_bought = 0.0;
    double p2p_sold = 0.0;
    double dso_bought = 0.0;
    double dso_sold = 0.0;
    double p2p_buy_cost = 0.0;
    double p2p_sell_revenue = 0.0;
    double dso_buy_cost = 0.0;
    double dso_sell_revenue = 0.0;

    double bought() const { return p2p_bought + dso_bought; }
    double sold() const { return p2p_sold + dso_sold; }
    double p2p_volume() const { return p2p_bought + p2p_sold; }
    double dso_volume() const { return dso_bought + dso_sold; }
    double profit() const {
        return p2p_sell_revenue + dso_sell_revenue - p2p_buy_cost - dso_buy_cost;
    }
};

/// Frozen record of everything that happened in one step.
struct StepLedger {
    int step = 0;
    std::vector<Order> orders;
    std::vector<Trade> trades;  // P2P first, then DSO settlements
    std::vector<AgentStepRecord> agents;
    std::optional<double> clearing_price;
    double clearing_volume = 0.0;
    double grid_balance = 0.0;
    double grid_capacity_kw = 1800.0;
    double feed_in = 0.0;
    double utility = 0.0;
    MarketBounds bounds;
    FlowResult flows;

    /// Throws std::invalid_argument for unknown agents.
    const AgentStepRecord& agent(std::string_view agent_id) const;
    bool has_agent(std::string_view agent_id) const;
};

TradeTotals trade_totals(std::span<const Trade> trades, std::string_view agent_id);

/// G - D + bought - sold - charged + discharged + unmet - spilled. Zero when
/// the step closes.
double energy_account_residual(const AgentStepRecord& record, const TradeTotals& totals);

}  // namespace lem
