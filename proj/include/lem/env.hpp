#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lem/assets.hpp"
#include "lem/grid.hpp"
#include "lem/kpi.hpp"
#include "lem/ledger.hpp"
#include "lem/market.hpp"
#include "lem/reward.hpp"
#include "lem/rng.hpp"

namespace lem {

struct EpisodeConfig {
    int max_steps = kHorizon;
    std::uint64_t seed = 42;
    double grid_capacity_kw = 1800.0;
    MarketBounds bounds;
    double forecast_max_error = 0.3;
    bool async_orders = true;
    double initial_soc = 0.5;
    int kpi_window = 6;
    int reputation_window = 6;
    double loss_fraction = 0.02;  // share of P2P volume lost in transport
};

/// Everything needed to instantiate an environment.
struct Scenario {
    EpisodeConfig episode;
    std::vector<AgentConfig> fleet;
    GridTopology topology;
    DsoTariff tariff;
    RewardWeights weights;
};

/// Throws std::invalid_argument describing the first inconsistency.
void validate(const Scenario& scenario);

/// Two-component continuous action.
struct Action {
    double price_signal = 0.0;     // [0, 1] onto [price_min, price_max]
    double quantity_signal = 0.0;  // [-1, 1]; > 0 buys, < 0 sells

    /// Clamps both components; throws std::invalid_argument on NaN.
    Action clamped() const;
};

inline constexpr std::size_t kObservationSize = 42;
using Observation = std::array<double, kObservationSize>;

/// Observation layout: 16 market signals, 16 agent signals, 10 KPIs.
namespace obs {
enum Index : std::size_t {
    // market signals (public)
    current_step = 0,    // step / max_steps
    time_of_day,         // (1 - cos(2 pi h / 24)) / 2
    clearing_price,      // / price_max; previous price or tariff midpoint if none
    clearing_volume,     // / grid capacity
    grid_balance,        // / grid capacity, signed
    dso_buy_volume,      // agents' imports from the DSO, / grid capacity
    dso_sell_volume,     // agents' exports to the DSO, / grid capacity
    dso_total_volume,    // / grid capacity
    p2p_volume,          // / grid capacity
    dso_trade_ratio,     // dso / (dso + p2p)
    net_grid_import,     // (import - export) / grid capacity, signed
    dso_buy_price,       // utility price of the coming step / price_max
    dso_sell_price,      // feed-in tariff of the coming step / price_max
    mean_local_price,    // mean P2P trade price / price_max
    price_spread,        // (utility - feed-in) / price_max
    local_price_advantage,  // (last utility - mean local price) / price_max
    // agent signals (private)
    generation,          // forecast for the coming step / quantity_max
    demand,              // forecast for the coming step / quantity_max
    cum_demand_satisfied,   // / (quantity_max * max_steps)
    cum_demand_deferred,
    remaining_demand,    // max(0, demand - generation) forecast / quantity_max
    cum_supply_satisfied,
    cum_supply_deferred,
    remaining_supply,    // max(0, generation - demand) forecast / quantity_max
    mean_profit,         // per step / (price_max * quantity_max)
    reputation,
    battery_energy,      // / quantity_max
    battery_soc,
    battery_available_charge,     // / quantity_max
    battery_available_discharge,  // / quantity_max
    battery_cum_charge,           // / (quantity_max * max_steps)
    battery_cum_discharge,
    // implicit-cooperation KPIs (public, identical for every agent)
    kpi_social_welfare,  // / (grid capacity * price_max)
    kpi_liquidity,       // / grid capacity (one hour of headroom)
    kpi_bid_ask_spread,  // / price range
    kpi_price_volatility,  // / price range
    kpi_imbalance,
    kpi_congestion,
    kpi_coordination_score,
    kpi_coordination_convergence,
    kpi_self_consumption,
    kpi_flexibility_utilization,
    count
};
static_assert(count == kObservationSize);
inline constexpr std::size_t market_begin = current_step;
inline constexpr std::size_t agent_begin = generation;
inline constexpr std::size_t kpi_begin = kpi_social_welfare;
}  // namespace obs

/// Box bounds of each observation entry (some unbounded).
struct ObservationSpace {
    Observation low;
    Observation high;
};
ObservationSpace observation_space();

/// Maps an action onto an order for the coming step. Returns nothing when the
/// quantity rounds to zero.
std::optional<Order> decode_action(const AgentConfig& agent, const Action& action,
                                   const Flex& forecast_flex, int step,
                                   const MarketBounds& bounds);

/// Per-agent mutable state carried across steps.
struct AgentState {
    BatteryState battery;
    Reputation reputation;
    ForecastPair generation_forecast;
    ForecastPair demand_forecast;
    double cum_demand_satisfied = 0.0;
    double cum_demand_deferred = 0.0;
    double cum_supply_satisfied = 0.0;
    double cum_supply_deferred = 0.0;
    double cum_profit = 0.0;
    int steps_settled = 0;
};

/// Public market picture after the last settled step.
struct MarketSignals {
    int step = 0;  // index of the coming step
    double clearing_price = 0.0;
    double clearing_volume = 0.0;
    double grid_balance = 0.0;
    double dso_import = 0.0;
    double dso_export = 0.0;
    double p2p_volume = 0.0;
    double mean_local_price = 0.0;
    double last_utility = 0.0;
    double utility = 0.0;  // coming step
    double feed_in = 0.0;  // coming step
};

Observation build_observation(const AgentState& agent, const MarketSignals& market,
                              const KpiRecord& kpis, const EpisodeConfig& config,
                              double grid_capacity_kw);

using ObservationMap = std::map<std::string, Observation>;
using ActionMap = std::map<std::string, Action>;
using RewardMap = std::map<std::string, RewardBreakdown>;

struct StepResult {
    ObservationMap observations;
    RewardMap rewards;
    bool done = false;
    KpiRecord kpis;
    StepLedger ledger;
};

/// Thrown on misuse of the reset/step protocol.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Dec-POMDP environment over one day of hourly market rounds.
///
/// Each step: decode actions against forecasts, shuffle arrival (async
/// orders), clear the P2P book, settle residuals with the DSO, reconcile
/// realized profiles through the batteries, evaluate the feeder, update the
/// KPIs, emit rewards and build the next observations.
///
/// An instance is strictly sequential. Independent instances seeded with
/// distinct instance ids draw independent random streams.
class Environment {
public:
    explicit Environment(Scenario scenario, std::uint64_t instance_id = 0);

    /// Reseeds when `seed` is given, otherwise uses the configured seed.
    ObservationMap reset(std::optional<std::uint64_t> seed = std::nullopt);
    /// Agents without an entry submit no order. Throws StateError before
    /// reset or after the episode is done.
    StepResult step(const ActionMap& actions);

    const Scenario& scenario() const { return scenario_; }
    const std::vector<std::string>& agent_ids() const { return agent_ids_; }
    int current_step() const { return step_; }
    bool done() const { return step_ >= scenario_.episode.max_steps; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t instance_id() const { return instance_id_; }
    const AgentState& agent_state(std::size_t index) const { return agents_.at(index); }
    const KpiRecord& last_kpis() const { return kpis_; }
    ObservationMap observations() const;

    /// Test hook: overwrite an agent's state between steps.
    AgentState& mutable_agent_state(std::size_t index) { return agents_.at(index); }

private:
    void draw_forecasts();
    void refresh_tariff_signals();

    Scenario scenario_;
    std::uint64_t instance_id_;
    std::uint64_t seed_ = 42;
    std::vector<std::string> agent_ids_;
    std::vector<AgentState> agents_;
    Rng forecast_rng_{0};
    Rng market_rng_{0};
    KpiTracker tracker_;
    KpiRecord kpis_;
    MarketSignals market_;
    int step_ = 0;
    bool started_ = false;
};

}  // namespace lem
