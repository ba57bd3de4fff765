#pragma once

#include <array>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "lem/market.hpp"

namespace lem {

/// Per-step system indicators. They are broadcast to every agent and feed
/// the cooperation factor of the reward.
struct KpiRecord {
    double social_welfare = 0.0;
    double liquidity = 0.0;
    double bid_ask_spread = 0.0;
    double price_volatility = 0.0;
    double imbalance = 0.0;
    double congestion = 0.0;
    double grid_balance = 0.0;
    double self_consumption = 0.0;
    double flexibility_utilization = 0.0;
    double coordination_score = 1.0;
    double coordination_convergence = 1.0;
    double p2p_trade_ratio = 0.0;
    double grid_balance_index = 1.0;

    static constexpr std::size_t kFieldCount = 13;
    static const std::array<std::string_view, kFieldCount>& field_names();
    /// Values in field_names() order.
    std::array<double, kFieldCount> values() const;
};

double social_welfare(std::span<const Trade> trades);
double liquidity(std::span<const Trade> trades);

struct SpreadResult {
    double spread = 0.0;
    bool defined = false;  // false when either book side is empty
};

/// Mean ask price minus mean bid price.
SpreadResult bid_ask_spread(std::span<const Order> orders);

/// Population standard deviation of the last `window` entries; 0 below two samples.
double price_volatility(std::span<const double> price_history, int window);

double imbalance(double total_buy_kwh, double total_sell_kwh, double grid_capacity_kw);
double self_consumption(double q_p2p, double q_dso);
double flexibility_utilization(double q_p2p, double q_available);
double coordination_score(double imbalance);
/// 1 / (1 + sigma) of the last `window` clearing volumes.
double coordination_convergence(std::span<const double> volume_history, int window);
double grid_balance_index(double grid_balance, double losses_kwh, double dso_volume,
                          double grid_capacity_kw);
/// Pearson correlation; 0 when either series is constant.
double agent_responsiveness(std::span<const double> kpi_series,
                            std::span<const double> action_series);

/// Everything the tracker needs from one settled step.
struct KpiStepInput {
    std::span<const Trade> trades;  // P2P and DSO layers
    std::span<const Order> orders;
    double congestion = 0.0;
    double grid_balance = 0.0;
    double available_flex_kwh = 0.0;  // summed sellable + buyable over agents
};

/// Rolling KPI computation across an episode (keeps price and volume history).
class KpiTracker {
public:
    KpiTracker(double grid_capacity_kw, int window, double loss_fraction);

    KpiRecord update(const KpiStepInput& step);
    void reset();

    const std::vector<double>& price_history() const { return prices_; }
    const std::vector<double>& volume_history() const { return volumes_; }

private:
    double grid_capacity_kw_;
    int window_;
    double loss_fraction_;
    std::vector<double> prices_;   // defined clearing prices only
    std::vector<double> volumes_;  // P2P clearing volume, every step
};

}  // namespace lem
