#include "lem/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lem {

namespace {

constexpr std::uint64_t kPolicyStream = 16;

Action order_action(bool buy, double desired, double flex, double price,
                    const GreedyParams& p) {
    const double limit = std::min(1.0, flex);
    if (desired <= p.tolerance || limit <= 0.0) return {0.5, 0.0};
    const double magnitude = std::min(1.0, desired / limit);
    const double range = p.bounds.price_max - p.bounds.price_min;
    const double price_signal = std::clamp((price - p.bounds.price_min) / range, 0.0, 1.0);
    return {price_signal, buy ? magnitude : -magnitude};
}

}  // namespace

Action zi_policy(const Observation&, Rng& rng) {
    const double price = rng.uniform();
    const double quantity = rng.uniform(-1.0, 1.0);
    return {price, quantity};
}

Action greedy_policy(const Observation& o, const GreedyParams& p) {
    const double pmax = p.bounds.price_max;
    const double feed_in = o[obs::dso_sell_price] * pmax;
    const double utility = o[obs::dso_buy_price] * pmax;
    const double gap = std::max(0.0, utility - feed_in);
    const double ask = feed_in + p.margin * gap;
    const double bid = utility - p.margin * gap;

    // Volumes below are in units of quantity_max.
    const double surplus = o[obs::remaining_supply];
    const double deficit = o[obs::remaining_demand];
    const double charge = o[obs::battery_available_charge];
    const double discharge = o[obs::battery_available_discharge];
    const double commit = p.dso_penalty_coeff > 0.0
                              ? p.dso_penalty_coeff / (p.dso_penalty_coeff + 0.01)
                              : 0.0;
    const double net_import = o[obs::net_grid_import];
    const bool short_market = net_import > p.tolerance;
    const bool long_market = net_import < -p.tolerance;
    // Equal per-agent share of the last DSO imbalance, in quantity_max units.
    const double share = std::abs(net_import) * p.grid_capacity_kw /
                         (p.bounds.quantity_max * static_cast<double>(std::max(1, p.fleet_size)));
    const double extra_discharge = commit * std::min(discharge, share);
    const double extra_charge = commit * std::min(charge, share);

    if (surplus > p.tolerance) {
        double desired = surplus;
        if (short_market) desired += extra_discharge;
        if (long_market) desired -= commit * std::min({surplus, charge, share});
        return order_action(false, desired, surplus + discharge, ask, p);
    }
    if (deficit > p.tolerance) {
        double desired = deficit;
        if (long_market) desired += extra_charge;
        if (short_market) desired -= commit * std::min({deficit, discharge, share});
        return order_action(true, desired, deficit + charge, bid, p);
    }
    if (short_market) return order_action(false, extra_discharge, discharge, ask, p);
    if (long_market) return order_action(true, extra_charge, charge, bid, p);
    return {0.5, 0.0};
}

LinearPolicy::LinearPolicy(std::vector<double> params) : params_(std::move(params)) {
    if (params_.size() != kParamCount)
        throw std::invalid_argument("linear policy needs " + std::to_string(kParamCount) +
                                    " parameters, got " + std::to_string(params_.size()));
    for (double v : params_)
        if (!std::isfinite(v)) throw std::invalid_argument("linear policy parameter is not finite");
}

Action LinearPolicy::act(const Observation& o) const {
    const std::size_t row = kObservationSize + 1;
    double z[2];
    for (std::size_t out = 0; out < 2; ++out) {
        const double* w = params_.data() + out * row;
        double acc = w[kObservationSize];
        for (std::size_t i = 0; i < kObservationSize; ++i) acc += w[i] * o[i];
        z[out] = acc;
    }
    return Action{0.5 * (1.0 + std::tanh(z[0])), std::tanh(z[1])}.clamped();
}

void ZiPolicy::begin_episode(const Environment& env) {
    streams_.clear();
    for (std::size_t i = 0; i < env.agent_ids().size(); ++i)
        streams_.emplace_back(derive_seed(env.seed(), env.instance_id(), kPolicyStream + i));
}

Action ZiPolicy::act(std::size_t agent_index, const Observation& observation) {
    if (agent_index >= streams_.size())
        throw std::logic_error("zi policy used before begin_episode");
    return zi_policy(observation, streams_[agent_index]);
}

Action GreedyPolicy::act(std::size_t, const Observation& observation) {
    return greedy_policy(observation, params_);
}

LinearPolicySet::LinearPolicySet(std::vector<LinearPolicy> policies, std::string name)
    : policies_(std::move(policies)), name_(std::move(name)) {
    if (policies_.empty()) throw std::invalid_argument("linear policy set is empty");
}

Action LinearPolicySet::act(std::size_t agent_index, const Observation& observation) {
    if (policies_.size() == 1) return policies_.front().act(observation);
    return policies_.at(agent_index).act(observation);
}

EpisodeResult run_episode(Environment& env, Policy& policy, std::optional<std::uint64_t> seed,
                          const StepObserver& on_step) {
    ObservationMap observations = env.reset(seed);
    policy.begin_episode(env);
    const auto& ids = env.agent_ids();

    EpisodeResult result;
    for (const auto& id : ids) result.agent_returns[id] = 0.0;
    while (!env.done()) {
        ActionMap actions;
        for (std::size_t i = 0; i < ids.size(); ++i)
            actions.emplace(ids[i], policy.act(i, observations.at(ids[i])));
        StepResult step = env.step(actions);
        for (const auto& [id, reward] : step.rewards) result.agent_returns[id] += reward.total;
        for (const auto& trade : step.ledger.trades) {
            if (trade.layer == Layer::p2p)
                result.p2p_volume_kwh += trade.quantity;
            else
                result.dso_volume_kwh += trade.quantity;
        }
        ++result.steps;
        if (on_step) on_step(step);
        observations = std::move(step.observations);
    }
    for (const auto& id : ids) result.total_reward += result.agent_returns[id];
    return result;
}

}  // namespace lem
