#include "lem/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "lem/exact_sum.hpp"

namespace lem {

void validate(const Scenario& s) {
    const auto& e = s.episode;
    if (e.max_steps < 1 || e.max_steps > kHorizon)
        throw std::invalid_argument("max_steps must lie in [1, " + std::to_string(kHorizon) + "]");
    if (!(e.grid_capacity_kw > 0.0)) throw std::invalid_argument("grid capacity must be positive");
    if (!(e.bounds.price_min > 0.0 && e.bounds.price_min < e.bounds.price_max))
        throw std::invalid_argument("price bounds must satisfy 0 < min < max");
    if (!(e.bounds.quantity_max > 0.0)) throw std::invalid_argument("quantity_max must be > 0");
    if (!(e.forecast_max_error >= 0.0 && e.forecast_max_error < 1.0))
        throw std::invalid_argument("forecast_max_error must lie in [0, 1)");
    if (!(e.initial_soc >= 0.0 && e.initial_soc <= 1.0))
        throw std::invalid_argument("initial_soc must lie in [0, 1]");
    if (e.kpi_window < 1 || e.reputation_window < 1)
        throw std::invalid_argument("windows must be >= 1");
    if (!(e.loss_fraction >= 0.0 && e.loss_fraction <= 1.0))
        throw std::invalid_argument("loss_fraction must lie in [0, 1]");
    if (s.fleet.empty()) throw std::invalid_argument("fleet is empty");

    std::set<std::string> ids;
    for (const auto& agent : s.fleet) {
        validate(agent);
        if (agent.agent_id == kDsoId)
            throw std::invalid_argument("agent id '" + agent.agent_id + "' is reserved");
        if (!ids.insert(agent.agent_id).second)
            throw std::invalid_argument("duplicate agent id '" + agent.agent_id + "'");
        if (!s.topology.contains(agent.node_id))
            throw std::invalid_argument("agent '" + agent.agent_id + "' sits on unknown node '" +
                                        agent.node_id + "'");
    }
    validate(s.tariff, e.bounds);
    if (static_cast<int>(s.tariff.feed_in.size()) < e.max_steps)
        throw std::invalid_argument("tariff shorter than the episode");
    validate(s.weights);
}

Action Action::clamped() const {
    if (std::isnan(price_signal) || std::isnan(quantity_signal))
        throw std::invalid_argument("action contains NaN");
    return {std::clamp(price_signal, 0.0, 1.0), std::clamp(quantity_signal, -1.0, 1.0)};
}

ObservationSpace observation_space() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    ObservationSpace space;
    space.low.fill(0.0);
    space.high.fill(1.0);
    // Volumes normalized by grid capacity can exceed one with large fleets.
    for (auto i : {obs::clearing_volume, obs::dso_buy_volume, obs::dso_sell_volume,
                   obs::dso_total_volume, obs::p2p_volume, obs::kpi_social_welfare,
                   obs::kpi_liquidity, obs::generation, obs::demand, obs::remaining_demand,
                   obs::remaining_supply, obs::battery_energy, obs::battery_available_charge,
                   obs::battery_available_discharge})
        space.high[i] = inf;
    for (auto i : {obs::grid_balance, obs::net_grid_import, obs::mean_profit}) {
        space.low[i] = -inf;
        space.high[i] = inf;
    }
    space.low[obs::local_price_advantage] = -1.0;
    space.low[obs::kpi_bid_ask_spread] = -1.0;
    return space;
}

std::optional<Order> decode_action(const AgentConfig& agent, const Action& action,
                                   const Flex& forecast_flex, int step,
                                   const MarketBounds& bounds) {
    const Action a = action.clamped();
    if (a.quantity_signal == 0.0) return std::nullopt;
    const bool buy = a.quantity_signal > 0.0;
    const double limit =
        std::min(bounds.quantity_max, buy ? forecast_flex.buyable_kwh : forecast_flex.sellable_kwh);
    const double quantity = std::abs(a.quantity_signal) * std::max(0.0, limit);
    if (quantity < 1e-9) return std::nullopt;
    const double price = bounds.price_min + a.price_signal * (bounds.price_max - bounds.price_min);
    return Order{agent.agent_id, buy ? Side::buy : Side::sell,
                 std::clamp(price, bounds.price_min, bounds.price_max), quantity, step, 0};
}

Observation build_observation(const AgentState& agent, const MarketSignals& m,
                              const KpiRecord& k, const EpisodeConfig& cfg,
                              double grid_capacity_kw) {
    const double pmax = cfg.bounds.price_max;
    const double qmax = cfg.bounds.quantity_max;
    const double cum_scale = qmax * cfg.max_steps;
    const double cap = grid_capacity_kw;
    const double range = cfg.bounds.price_max - cfg.bounds.price_min;
    const double dso_total = m.dso_import + m.dso_export;
    const double hour = static_cast<double>(m.step % kHorizon);
    const double gen = agent.generation_forecast.forecast_kw;
    const double dem = agent.demand_forecast.forecast_kw;

    Observation o{};
    o[obs::current_step] = static_cast<double>(m.step) / cfg.max_steps;
    o[obs::time_of_day] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * hour / kHorizon));
    o[obs::clearing_price] = m.clearing_price / pmax;
    o[obs::clearing_volume] = m.clearing_volume / cap;
    o[obs::grid_balance] = m.grid_balance / cap;
    o[obs::dso_buy_volume] = m.dso_import / cap;
    o[obs::dso_sell_volume] = m.dso_export / cap;
    o[obs::dso_total_volume] = dso_total / cap;
    o[obs::p2p_volume] = m.p2p_volume / cap;
    o[obs::dso_trade_ratio] =
        dso_total + m.p2p_volume > 0.0 ? dso_total / (dso_total + m.p2p_volume) : 0.0;
    o[obs::net_grid_import] = (m.dso_import - m.dso_export) / cap;
    o[obs::dso_buy_price] = m.utility / pmax;
    o[obs::dso_sell_price] = m.feed_in / pmax;
    o[obs::mean_local_price] = m.mean_local_price / pmax;
    o[obs::price_spread] = (m.utility - m.feed_in) / pmax;
    o[obs::local_price_advantage] = std::clamp((m.last_utility - m.mean_local_price) / pmax, -1.0, 1.0);

    o[obs::generation] = gen / qmax;
    o[obs::demand] = dem / qmax;
    o[obs::cum_demand_satisfied] = agent.cum_demand_satisfied / cum_scale;
    o[obs::cum_demand_deferred] = agent.cum_demand_deferred / cum_scale;
    o[obs::remaining_demand] = std::max(0.0, dem - gen) / qmax;
    o[obs::cum_supply_satisfied] = agent.cum_supply_satisfied / cum_scale;
    o[obs::cum_supply_deferred] = agent.cum_supply_deferred / cum_scale;
    o[obs::remaining_supply] = std::max(0.0, gen - dem) / qmax;
    o[obs::mean_profit] =
        agent.steps_settled > 0 ? agent.cum_profit / agent.steps_settled / (pmax * qmax) : 0.0;
    o[obs::reputation] = agent.reputation.score;
    o[obs::battery_energy] = agent.battery.energy_kwh / qmax;
    o[obs::battery_soc] = agent.battery.soc();
    o[obs::battery_available_charge] = agent.battery.max_charge_kwh() / qmax;
    o[obs::battery_available_discharge] = agent.battery.max_discharge_kwh() / qmax;
    o[obs::battery_cum_charge] = agent.battery.cumulative_charge_kwh / cum_scale;
    o[obs::battery_cum_discharge] = agent.battery.cumulative_discharge_kwh / cum_scale;

    o[obs::kpi_social_welfare] = k.social_welfare / (cap * pmax);
    o[obs::kpi_liquidity] = k.liquidity / cap;
    o[obs::kpi_bid_ask_spread] = std::clamp(k.bid_ask_spread / range, -1.0, 1.0);
    o[obs::kpi_price_volatility] = std::min(1.0, k.price_volatility / range);
    o[obs::kpi_imbalance] = k.imbalance;
    o[obs::kpi_congestion] = k.congestion;
    o[obs::kpi_coordination_score] = k.coordination_score;
    o[obs::kpi_coordination_convergence] = k.coordination_convergence;
    o[obs::kpi_self_consumption] = k.self_consumption;
    o[obs::kpi_flexibility_utilization] = k.flexibility_utilization;
    return o;
}

Environment::Environment(Scenario scenario, std::uint64_t instance_id)
    : scenario_(std::move(scenario)),
      instance_id_(instance_id),
      tracker_(scenario_.episode.grid_capacity_kw, scenario_.episode.kpi_window,
               scenario_.episode.loss_fraction) {
    validate(scenario_);
    for (const auto& agent : scenario_.fleet) agent_ids_.push_back(agent.agent_id);
    seed_ = scenario_.episode.seed;
}

void Environment::draw_forecasts() {
    const double max_error = scenario_.episode.forecast_max_error;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        auto& st = agents_[i];
        if (step_ >= scenario_.episode.max_steps) {
            st.generation_forecast = {0.0, 0.0, max_error};
            st.demand_forecast = {0.0, 0.0, max_error};
            continue;
        }
        const auto actual = realized_profile(scenario_.fleet[i], step_);
        st.generation_forecast = make_forecast(actual.generation_kw, forecast_rng_, max_error);
        st.demand_forecast = make_forecast(actual.demand_kw, forecast_rng_, max_error);
    }
}

void Environment::refresh_tariff_signals() {
    market_.step = step_;
    if (step_ < scenario_.episode.max_steps) {
        market_.utility = scenario_.tariff.utility_at(step_);
        market_.feed_in = scenario_.tariff.feed_in_at(step_);
    }
}

ObservationMap Environment::reset(std::optional<std::uint64_t> seed) {
    seed_ = seed.value_or(scenario_.episode.seed);
    forecast_rng_ = Rng(derive_seed(seed_, instance_id_, 1));
    market_rng_ = Rng(derive_seed(seed_, instance_id_, 2));
    step_ = 0;
    started_ = true;

    agents_.clear();
    for (const auto& agent : scenario_.fleet) {
        AgentState st;
        st.battery = BatteryState::at_soc(agent.battery_capacity_kwh, scenario_.episode.initial_soc);
        st.reputation = Reputation{agent.agent_id, 1.0, scenario_.episode.reputation_window, {}};
        agents_.push_back(std::move(st));
    }
    tracker_.reset();
    kpis_ = KpiRecord{};

    market_ = MarketSignals{};
    refresh_tariff_signals();
    market_.clearing_price = scenario_.tariff.midpoint(0);
    market_.mean_local_price = market_.clearing_price;
    market_.last_utility = market_.utility;
    draw_forecasts();
    return observations();
}

ObservationMap Environment::observations() const {
    ObservationMap out;
    for (std::size_t i = 0; i < agents_.size(); ++i)
        out.emplace(agent_ids_[i], build_observation(agents_[i], market_, kpis_, scenario_.episode,
                                                     scenario_.episode.grid_capacity_kw));
    return out;
}

StepResult Environment::step(const ActionMap& actions) {
    if (!started_) throw StateError("step() called before reset()");
    if (done()) throw StateError("episode finished; call reset()");
    const auto& cfg = scenario_.episode;
    const int t = step_;

    StepLedger ledger;
    ledger.step = t;
    ledger.grid_capacity_kw = cfg.grid_capacity_kw;
    ledger.feed_in = scenario_.tariff.feed_in_at(t);
    ledger.utility = scenario_.tariff.utility_at(t);
    ledger.bounds = cfg.bounds;

    for (const auto& [id, _] : actions)
        if (std::ranges::find(agent_ids_, id) == agent_ids_.end())
            throw std::invalid_argument("action for unknown agent '" + id + "'");

    for (std::size_t i = 0; i < agents_.size(); ++i) {
        const auto it = actions.find(agent_ids_[i]);
        if (it == actions.end()) continue;
        const auto& st = agents_[i];
        const Flex flex = available_flex(st.battery, st.generation_forecast.forecast_kw,
                                         st.demand_forecast.forecast_kw);
        if (auto order = decode_action(scenario_.fleet[i], it->second, flex, t, cfg.bounds)) {
            order->arrival_rank = static_cast<int>(ledger.orders.size());
            ledger.orders.push_back(std::move(*order));
        }
    }
    if (cfg.async_orders) ledger.orders = arrival_shuffle(std::move(ledger.orders), market_rng_);

    ReputationMap reputations;
    for (std::size_t i = 0; i < agents_.size(); ++i)
        reputations.emplace(agent_ids_[i], agents_[i].reputation.score);

    ClearingResult cleared = clear_market(ledger.orders, reputations);
    ledger.trades = std::move(cleared.trades);
    for (auto& trade : settle_dso(cleared.residual_buys, cleared.residual_sells, scenario_.tariff, t))
        ledger.trades.push_back(std::move(trade));
    ledger.clearing_price = cleared.clearing_price;
    ledger.clearing_volume = cleared.clearing_volume;

    // Settle realized profiles through the batteries.
    std::vector<EnergyPosition> positions;
    std::map<std::string, double, std::less<>> injections;
    ExactSum available_flex_total;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        auto& st = agents_[i];
        const auto& agent = scenario_.fleet[i];
        const auto actual = realized_profile(agent, t);
        const TradeTotals totals = trade_totals(ledger.trades, agent.agent_id);

        AgentStepRecord rec;
        rec.agent_id = agent.agent_id;
        rec.node_id = agent.node_id;
        rec.capacity_kw = agent.capacity_kw;
        rec.generation_kw = actual.generation_kw;
        rec.demand_kw = actual.demand_kw;
        rec.forecast_generation_kw = st.generation_forecast.forecast_kw;
        rec.forecast_demand_kw = st.demand_forecast.forecast_kw;
        rec.flex = available_flex(st.battery, actual.generation_kw, actual.demand_kw);
        available_flex_total.add(rec.flex.sellable_kwh);
        available_flex_total.add(rec.flex.buyable_kwh);

        const double net = actual.generation_kw - actual.demand_kw + totals.bought() - totals.sold();
        if (net > 0.0) {
            auto charged = battery_charge(st.battery, net);
            st.battery = charged.state;
            rec.battery_charged_kwh = charged.accepted_kwh;
            rec.spilled_kwh = net - charged.accepted_kwh;
        } else if (net < 0.0) {
            auto discharged = battery_discharge(st.battery, -net);
            st.battery = discharged.state;
            rec.battery_discharged_kwh = discharged.delivered_kwh;
            rec.unmet_kwh = -net - discharged.delivered_kwh;
        }
        rec.undelivered_p2p_kwh = std::min(totals.p2p_sold, rec.unmet_kwh);
        rec.net_injection_kw = actual.generation_kw - actual.demand_kw - rec.battery_charged_kwh +
                               rec.battery_discharged_kwh + rec.unmet_kwh - rec.spilled_kwh;
        injections[agent.node_id] += rec.net_injection_kw;

        const double demand_short = std::min(actual.demand_kw, rec.unmet_kwh);
        const double supply_short = std::min(actual.generation_kw, rec.spilled_kwh);
        st.cum_demand_deferred += demand_short;
        st.cum_demand_satisfied += actual.demand_kw - demand_short;
        st.cum_supply_deferred += supply_short;
        st.cum_supply_satisfied += actual.generation_kw - supply_short;
        st.cum_profit += totals.profit();
        ++st.steps_settled;
        st.reputation = update_reputation(std::move(st.reputation), totals.p2p_sold,
                                          totals.p2p_sold - rec.undelivered_p2p_kwh);

        positions.push_back({actual.generation_kw, actual.demand_kw, totals.bought(), totals.sold()});
        ledger.agents.push_back(std::move(rec));
    }
    ledger.grid_balance = grid_balance(positions);
    ledger.flows = edge_flows(scenario_.topology, injections);

    kpis_ = tracker_.update({ledger.trades, ledger.orders, ledger.flows.congestion_mean,
                             ledger.grid_balance, available_flex_total.value()});

    StepResult result;
    for (const auto& id : agent_ids_)
        result.rewards.emplace(id, compute_reward(id, ledger, kpis_, scenario_.weights));

    // Public signals for the next observation.
    double import_kwh = 0.0;
    double export_kwh = 0.0;
    double p2p_price_sum = 0.0;
    std::size_t p2p_count = 0;
    for (const auto& trade : ledger.trades) {
        if (trade.layer == Layer::dso_buy) import_kwh += trade.quantity;
        if (trade.layer == Layer::dso_sell) export_kwh += trade.quantity;
        if (trade.layer == Layer::p2p) {
            p2p_price_sum += trade.price;
            ++p2p_count;
        }
    }
    if (ledger.clearing_price) market_.clearing_price = *ledger.clearing_price;
    if (p2p_count > 0) market_.mean_local_price = p2p_price_sum / static_cast<double>(p2p_count);
    market_.clearing_volume = ledger.clearing_volume;
    market_.grid_balance = ledger.grid_balance;
    market_.dso_import = import_kwh;
    market_.dso_export = export_kwh;
    market_.p2p_volume = ledger.clearing_volume;
    market_.last_utility = ledger.utility;

    ++step_;
    refresh_tariff_signals();
    draw_forecasts();

    result.observations = observations();
    result.done = done();
    result.kpis = kpis_;
    result.ledger = std::move(ledger);
    return result;
}

}  // namespace lem
