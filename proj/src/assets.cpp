#include "lem/assets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lem {

AgentConfig make_agent(std::string agent_id, std::string node_id, double capacity_kw,
                       double battery_ratio, std::vector<double> generation,
                       std::vector<double> demand) {
    AgentConfig agent;
    agent.agent_id = std::move(agent_id);
    agent.node_id = std::move(node_id);
    agent.capacity_kw = capacity_kw;
    agent.battery_ratio = battery_ratio;
    agent.battery_capacity_kwh = capacity_kw * battery_ratio;
    agent.generation_profile = std::move(generation);
    agent.demand_profile = std::move(demand);
    validate(agent);
    return agent;
}

void validate(const AgentConfig& agent) {
    const auto fail = [&](const std::string& what) {
        throw std::invalid_argument("agent '" + agent.agent_id + "': " + what);
    };
    if (agent.agent_id.empty()) fail("empty agent_id");
    if (agent.node_id.empty()) fail("empty node_id");
    if (!(agent.capacity_kw > 0.0)) fail("capacity_kw must be positive");
    if (!(agent.battery_ratio >= 0.0 && agent.battery_ratio <= 1.0))
        fail("battery_ratio must lie in [0, 1]");
    if (std::abs(agent.battery_capacity_kwh - agent.capacity_kw * agent.battery_ratio) > 1e-9)
        fail("battery_capacity_kwh must equal capacity_kw * battery_ratio");
    if (agent.generation_profile.size() != kHorizon || agent.demand_profile.size() != kHorizon)
        fail("profiles must hold " + std::to_string(kHorizon) + " hourly values");
    const auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!std::ranges::all_of(agent.generation_profile, non_negative) ||
        !std::ranges::all_of(agent.demand_profile, non_negative))
        fail("profile values must be finite and non-negative");
}

HourlyProfile realized_profile(const AgentConfig& agent, int step) {
    if (step < 0 || step >= static_cast<int>(agent.generation_profile.size()) ||
        step >= static_cast<int>(agent.demand_profile.size()))
        throw std::out_of_range("profile step " + std::to_string(step) + " out of range");
    const auto i = static_cast<std::size_t>(step);
    return {agent.generation_profile[i], agent.demand_profile[i]};
}

BatteryState BatteryState::at_soc(double capacity_kwh, double soc) {
    BatteryState state;
    state.capacity_kwh = capacity_kwh;
    state.energy_kwh = std::clamp(soc, state.soc_min, state.soc_max) * capacity_kwh;
    return state;
}

double BatteryState::max_charge_kwh() const {
    return std::max(0.0, ceiling_kwh() - energy_kwh) / efficiency;
}

double BatteryState::max_discharge_kwh() const {
    return std::max(0.0, energy_kwh - floor_kwh()) * efficiency;
}

ChargeResult battery_charge(const BatteryState& state, double request_kwh) {
    if (!(request_kwh >= 0.0)) throw std::invalid_argument("charge request must be >= 0");
    ChargeResult out{state, std::min(request_kwh, state.max_charge_kwh())};
    // Clamp guards the band against a last-ulp overshoot when filling to the ceiling.
    out.state.energy_kwh =
        std::min(state.energy_kwh + out.accepted_kwh * state.efficiency, state.ceiling_kwh());
    out.state.energy_kwh = std::max(out.state.energy_kwh, state.energy_kwh);
    out.state.cumulative_charge_kwh += out.accepted_kwh;
    return out;
}

DischargeResult battery_discharge(const BatteryState& state, double request_kwh) {
    if (!(request_kwh >= 0.0)) throw std::invalid_argument("discharge request must be >= 0");
    DischargeResult out{state, std::min(request_kwh, state.max_discharge_kwh())};
    out.state.energy_kwh =
        std::max(state.energy_kwh - out.delivered_kwh / state.efficiency, state.floor_kwh());
    out.state.energy_kwh = std::min(out.state.energy_kwh, state.energy_kwh);
    out.state.cumulative_discharge_kwh += out.delivered_kwh;
    return out;
}

Flex available_flex(const BatteryState& state, double generation_kw, double demand_kw) {
    if (!(generation_kw >= 0.0) || !(demand_kw >= 0.0))
        throw std::invalid_argument("generation and demand must be >= 0");
    return {std::max(generation_kw - demand_kw, 0.0) + state.max_discharge_kwh(),
            std::max(demand_kw - generation_kw, 0.0) + state.max_charge_kwh()};
}

ForecastPair make_forecast(double actual_kw, double unit_draw, double max_error) {
    if (!(actual_kw >= 0.0)) throw std::invalid_argument("actual must be >= 0");
    const double eps = max_error * (2.0 * std::clamp(unit_draw, 0.0, 1.0) - 1.0);
    return {actual_kw, actual_kw * (1.0 + eps), max_error};
}

ForecastPair make_forecast(double actual_kw, Rng& rng, double max_error) {
    return make_forecast(actual_kw, rng.uniform(), max_error);
}

}  // namespace lem
