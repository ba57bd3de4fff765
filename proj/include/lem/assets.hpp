#pragma once

#include <string>
#include <vector>

#include "lem/rng.hpp"

namespace lem {

/// Episode horizon in hourly steps; every profile carries one value per hour.
inline constexpr int kHorizon = 24;

struct AgentConfig {
    std::string agent_id;
    std::string node_id;
    double capacity_kw = 0.0;
    double battery_capacity_kwh = 0.0;
    double battery_ratio = 0.0;
    std::vector<double> generation_profile;  // kW per hour
    std::vector<double> demand_profile;      // kW per hour
};

/// Builds an agent whose battery capacity follows capacity_kw * battery_ratio.
AgentConfig make_agent(std::string agent_id, std::string node_id, double capacity_kw,
                       double battery_ratio, std::vector<double> generation,
                       std::vector<double> demand);

/// Throws std::invalid_argument naming the violated invariant.
void validate(const AgentConfig& agent);

struct HourlyProfile {
    double generation_kw = 0.0;
    double demand_kw = 0.0;
};

/// Throws std::out_of_range when step is outside the profile.
HourlyProfile realized_profile(const AgentConfig& agent, int step);

/// Battery with symmetric lossy conversion and a usable SoC band.
///
/// `energy_kwh` is the stored energy. Charging a request of x kWh stores
/// x * efficiency; delivering y kWh withdraws y / efficiency.
struct BatteryState {
    double energy_kwh = 0.0;
    double capacity_kwh = 0.0;
    double soc_min = 0.05;
    double soc_max = 0.95;
    double efficiency = 0.95;
    double cumulative_charge_kwh = 0.0;
    double cumulative_discharge_kwh = 0.0;

    static BatteryState at_soc(double capacity_kwh, double soc);

    double soc() const { return capacity_kwh > 0.0 ? energy_kwh / capacity_kwh : 0.0; }
    double floor_kwh() const { return soc_min * capacity_kwh; }
    double ceiling_kwh() const { return soc_max * capacity_kwh; }
    /// Largest request battery_charge would accept in full.
    double max_charge_kwh() const;
    /// Largest amount battery_discharge can deliver.
    double max_discharge_kwh() const;
};

struct ChargeResult {
    BatteryState state;
    double accepted_kwh = 0.0;
};

struct DischargeResult {
    BatteryState state;
    double delivered_kwh = 0.0;
};

ChargeResult battery_charge(const BatteryState& state, double request_kwh);
DischargeResult battery_discharge(const BatteryState& state, double request_kwh);

struct Flex {
    double sellable_kwh = 0.0;
    double buyable_kwh = 0.0;
};

/// Surplus plus discharge capability on the sell side; deficit plus charge
/// acceptance on the buy side.
Flex available_flex(const BatteryState& state, double generation_kw, double demand_kw);

struct ForecastPair {
    double actual_kw = 0.0;
    double forecast_kw = 0.0;
    double max_error = 0.3;
};

/// Multiplicative noise: forecast = actual * (1 + max_error * (2u - 1)) for a
/// unit draw u in [0, 1]. u = 1 gives the +max_error boundary.
ForecastPair make_forecast(double actual_kw, double unit_draw, double max_error);

ForecastPair make_forecast(double actual_kw, Rng& rng, double max_error = 0.3);

}  // namespace lem
