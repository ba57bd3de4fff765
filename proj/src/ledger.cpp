#include "lem/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace lem {

const AgentStepRecord& StepLedger::agent(std::string_view agent_id) const {
    const auto it = std::ranges::find(agents, agent_id, &AgentStepRecord::agent_id);
    if (it == agents.end())
        throw std::invalid_argument("agent '" + std::string(agent_id) + "' not in step ledger");
    return *it;
}

bool StepLedger::has_agent(std::string_view agent_id) const {
    return std::ranges::find(agents, agent_id, &AgentStepRecord::agent_id) != agents.end();
}

TradeTotals trade_totals(std::span<const Trade> trades, std::string_view agent_id) {
    TradeTotals t;
    for (const auto& trade : trades) {
        const double value = trade.price * trade.quantity;
        const bool p2p = trade.layer == Layer::p2p;
        if (trade.buyer_id == agent_id) {
            (p2p ? t.p2p_bought : t.dso_bought) += trade.quantity;
            (p2p ? t.p2p_buy_cost : t.dso_buy_cost) += value;
        }
        if (trade.seller_id == agent_id) {
            (p2p ? t.p2p_sold : t.dso_sold) += trade.quantity;
            (p2p ? t.p2p_sell_revenue : t.dso_sell_revenue) += value;
        }
    }
    return t;
}

double energy_account_residual(const AgentStepRecord& r, const TradeTotals& t) {
    return r.generation_kw - r.demand_kw + t.bought() - t.sold() - r.battery_charged_kwh +
           r.battery_discharged_kwh + r.unmet_kwh - r.spilled_kwh;
}

}  // namespace lem
