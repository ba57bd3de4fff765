#include "lem/reward.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "lem/exact_sum.hpp"

namespace lem {

namespace {

void check_group(const char* name, std::initializer_list<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument(std::string(name) + " weights must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(name) + " weights must sum to 1");
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

void validate(const RewardWeights& w) {
    check_group("base", {w.base.economic, w.base.grid_balance, w.base.resource_alloc,
                         w.base.trading, w.base.stability});
    check_group("contribution", {w.contribution.imbalance, w.contribution.price_efficiency,
                                 w.contribution.volume_share});
    check_group("cooperation", {w.cooperation.self_consumption, w.cooperation.coordination_score,
                                w.cooperation.coordination_convergence});
    if (!(w.dso_penalty_coeff >= 0.0) || !(w.unmet_penalty_coeff >= 0.0))
        throw std::invalid_argument("penalty coefficients must be >= 0");
}

AgentOutcome agent_outcome(const StepLedger& ledger, std::string_view agent_id) {
    const auto& rec = ledger.agent(agent_id);
    return {trade_totals(ledger.trades, agent_id), rec.flex.sellable_kwh + rec.flex.buyable_kwh,
            rec.unmet_kwh, rec.capacity_kw};
}

MarketContext market_context(const StepLedger& ledger, const KpiRecord& kpis) {
    return {ledger.grid_balance,
            ledger.grid_capacity_kw,
            ledger.feed_in,
            ledger.utility,
            kpis.price_volatility,
            ledger.bounds.price_max - ledger.bounds.price_min};
}

BaseComponents base_reward(const AgentOutcome& o, const MarketContext& ctx,
                           const BaseWeights& w) {
    const auto& t = o.trades;
    BaseComponents c;
    const double midpoint = 0.5 * (ctx.feed_in + ctx.utility);
    const double gain = (ctx.utility * t.p2p_bought - t.p2p_buy_cost) +
                        (t.p2p_sell_revenue - ctx.feed_in * t.p2p_sold);
    c.economic = midpoint > 0.0 ? gain / (midpoint * o.capacity_kw) : 0.0;
    c.grid_balance_term = sign(ctx.grid_balance) * (t.p2p_bought - t.p2p_sold) / o.capacity_kw;
    c.resource_alloc = o.available_flex_kwh > 0.0
                           ? std::clamp(t.p2p_volume() / o.available_flex_kwh, 0.0, 1.0)
                           : 0.0;
    c.trading = t.p2p_volume() / o.capacity_kw;
    c.stability = ctx.price_range > 0.0
                      ? 1.0 - std::min(1.0, ctx.price_volatility / ctx.price_range)
                      : 1.0;
    c.base = w.economic * c.economic + w.grid_balance * c.grid_balance_term +
             w.resource_alloc * c.resource_alloc + w.trading * c.trading +
             w.stability * c.stability;
    return c;
}

double cooperation_factor(const KpiRecord& k, const CooperationWeights& w) {
    const double f = w.self_consumption * k.self_consumption +
                     w.coordination_score * k.coordination_score +
                     w.coordination_convergence * k.coordination_convergence;
    return std::clamp(f, 0.0, 1.0);
}

ContributionTerms contribution_factor(std::string_view agent_id, const StepLedger& ledger,
                                      const ContributionWeights& w) {
    if (!ledger.has_agent(agent_id))
        throw std::invalid_argument("agent '" + std::string(agent_id) + "' not in step ledger");
    const TradeTotals mine = trade_totals(ledger.trades, agent_id);
    ContributionTerms c;

    // Removing the agent's trades shifts the balance by its net purchase.
    const double b = ledger.grid_balance;
    const double b_without = b - (mine.bought() - mine.sold());
    c.imbalance = (std::abs(b_without) - std::abs(b)) / ledger.grid_capacity_kw;

    ExactSum market_volume;
    ExactSum market_value;
    for (const auto& t : ledger.trades) {
        if (t.layer != Layer::p2p) continue;
        market_volume.add(t.quantity);
        market_value.add(t.price * t.quantity);
    }
    const double total_p2p = market_volume.value();
    const double band = ledger.utility - ledger.feed_in;
    if (mine.p2p_volume() > 0.0 && total_p2p > 0.0 && band > 0.0) {
        const double midpoint = 0.5 * (ledger.feed_in + ledger.utility);
        const double market_mean = market_value.value() / total_p2p;
        const double my_mean = (mine.p2p_buy_cost + mine.p2p_sell_revenue) / mine.p2p_volume();
        c.price_efficiency = std::clamp(
            (std::abs(market_mean - midpoint) - std::abs(my_mean - midpoint)) / band, -1.0, 1.0);
    }
    // Each P2P trade has one buyer and one seller, so an agent appears on at
    // most one side of any trade.
    if (total_p2p > 0.0) c.volume_share = std::min(1.0, mine.p2p_volume() / total_p2p);

    c.factor = std::clamp(w.imbalance * c.imbalance + w.price_efficiency * c.price_efficiency +
                              w.volume_share * c.volume_share,
                          -1.0, 1.0);
    return c;
}

Penalties penalties(const AgentOutcome& o, double grid_balance, double grid_capacity_kw,
                    const RewardWeights& w) {
    return {w.dso_penalty_coeff * o.trades.dso_volume() *
                (1.0 + std::abs(grid_balance) / grid_capacity_kw),
            w.unmet_penalty_coeff * o.unmet_kwh};
}

double RewardBreakdown::recompose() const {
    return base * (1.0 + f_coop * f_contrib) - dso_penalty - unmet_penalty;
}

RewardBreakdown compose_reward(const BaseComponents& b, double f_coop, double f_contrib,
                               const Penalties& pen) {
    RewardBreakdown r;
    r.economic = b.economic;
    r.grid_balance_term = b.grid_balance_term;
    r.resource_alloc = b.resource_alloc;
    r.trading = b.trading;
    r.stability = b.stability;
    r.base = b.base;
    r.f_coop = f_coop;
    r.f_contrib = f_contrib;
    r.dso_penalty = pen.dso;
    r.unmet_penalty = pen.unmet;
    r.total = r.recompose();
    return r;
}

RewardBreakdown compute_reward(std::string_view agent_id, const StepLedger& ledger,
                               const KpiRecord& kpis, const RewardWeights& weights) {
    const AgentOutcome outcome = agent_outcome(ledger, agent_id);
    const MarketContext ctx = market_context(ledger, kpis);
    return compose_reward(base_reward(outcome, ctx, weights.base),
                          cooperation_factor(kpis, weights.cooperation),
                          contribution_factor(agent_id, ledger, weights.contribution).factor,
                          penalties(outcome, ledger.grid_balance, ledger.grid_capacity_kw,
                                    weights));
}

}  // namespace lem
