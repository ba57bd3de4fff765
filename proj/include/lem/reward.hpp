#pragma once

#include <string_view>

#include "lem/kpi.hpp"
#include "lem/ledger.hpp"

namespace lem {

struct BaseWeights {
    double economic = 0.2;
    double grid_balance = 0.2;
    double resource_alloc = 0.2;
    double trading = 0.2;
    double stability = 0.2;
};

struct ContributionWeights {
    double imbalance = 1.0 / 3.0;
    double price_efficiency = 1.0 / 3.0;
    double volume_share = 1.0 / 3.0;
};

struct CooperationWeights {
    double self_consumption = 1.0 / 3.0;
    double coordination_score = 1.0 / 3.0;
    double coordination_convergence = 1.0 / 3.0;
};

struct RewardWeights {
    BaseWeights base;
    ContributionWeights contribution;
    CooperationWeights cooperation;
    double dso_penalty_coeff = 0.01;    // per kWh traded with the DSO
    double unmet_penalty_coeff = 0.02;  // per kWh of unmet demand
};

/// Throws std::invalid_argument when a weight is negative or a group does
/// not sum to one (1e-9).
void validate(const RewardWeights& weights);

/// One agent's settled position, the input to the base reward and penalties.
struct AgentOutcome {
    TradeTotals trades;
    double available_flex_kwh = 0.0;
    double unmet_kwh = 0.0;
    double capacity_kw = 1.0;
};

AgentOutcome agent_outcome(const StepLedger& ledger, std::string_view agent_id);

/// Step-wide quantities shared by every agent's reward.
struct MarketContext {
    double grid_balance = 0.0;
    double grid_capacity_kw = 1800.0;
    double feed_in = 0.0;
    double utility = 0.0;
    double price_volatility = 0.0;
    double price_range = 580.0;
};

MarketContext market_context(const StepLedger& ledger, const KpiRecord& kpis);

struct BaseComponents {
    double economic = 0.0;
    double grid_balance_term = 0.0;
    double resource_alloc = 0.0;
    double trading = 0.0;
    double stability = 0.0;
    double base = 0.0;
};

/// Individual performance terms, each normalized to O(1):
///  - economic: P2P gain over the DSO alternative (utility for buys, feed-in
///    for sells) per tariff midpoint and agent capacity;
///  - grid balance: P2P net purchase signed by the grid balance, per capacity,
///    so buying into a surplus and selling into a deficit score positive;
///  - resource allocation: P2P volume over available flexibility;
///  - trading: P2P volume per capacity (DSO volume carries zero weight);
///  - stability: 1 - price volatility over the price range.
BaseComponents base_reward(const AgentOutcome& outcome, const MarketContext& ctx,
                           const BaseWeights& weights);

/// Weighted sum of self-consumption, coordination score and coordination
/// convergence; each in [0, 1].
double cooperation_factor(const KpiRecord& kpis, const CooperationWeights& weights);

struct ContributionTerms {
    double imbalance = 0.0;         // (|B without agent| - |B|) / C
    double price_efficiency = 0.0;  // closeness to the tariff midpoint vs the market
    double volume_share = 0.0;      // share of P2P volume the agent took part in
    double factor = 0.0;            // weighted sum clamped to [-1, 1]
};

/// Credit assignment by counterfactual removal of the agent's trades.
/// Throws std::invalid_argument for agents absent from the ledger.
ContributionTerms contribution_factor(std::string_view agent_id, const StepLedger& ledger,
                                      const ContributionWeights& weights);

struct Penalties {
    double dso = 0.0;
    double unmet = 0.0;
};

/// dso = coeff * dso_volume * (1 + |B| / C); unmet = coeff * unmet_kwh.
Penalties penalties(const AgentOutcome& outcome, double grid_balance, double grid_capacity_kw,
                    const RewardWeights& weights);

struct RewardBreakdown {
    double economic = 0.0;
    double grid_balance_term = 0.0;
    double resource_alloc = 0.0;
    double trading = 0.0;
    double stability = 0.0;
    double base = 0.0;
    double f_coop = 0.0;
    double f_contrib = 0.0;
    double dso_penalty = 0.0;
    double unmet_penalty = 0.0;
    double total = 0.0;

    /// base * (1 + f_coop * f_contrib) - dso_penalty - unmet_penalty.
    double recompose() const;
};

RewardBreakdown compose_reward(const BaseComponents& base, double f_coop, double f_contrib,
                               const Penalties& pen);

RewardBreakdown compute_reward(std::string_view agent_id, const StepLedger& ledger,
                               const KpiRecord& kpis, const RewardWeights& weights);

}  // namespace lem
