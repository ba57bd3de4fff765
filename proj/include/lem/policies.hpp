#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lem/env.hpp"
#include "lem/rng.hpp"

namespace lem {

/// Zero-intelligence bidding: uniform price signal and uniform quantity signal.
Action zi_policy(const Observation& observation, Rng& rng);

struct GreedyParams {
    MarketBounds bounds;
    double margin = 0.05;  // fraction of the tariff gap conceded to the counterparty
    /// DSO penalty the agent expects per kWh. Battery flexibility is committed
    /// to the short side of the market with weight c = p / (p + 0.01).
    double dso_penalty_coeff = 0.0;
    double grid_capacity_kw = 1800.0;  // scale of the net-import signal
    int fleet_size = 8;                // agents sharing the imbalance
    double tolerance = 1e-6;  // normalized volume treated as zero
};

/// Tariff-band heuristic. Surplus sells just above feed-in, deficit buys just
/// below utility. The battery backs the side the previous step's net DSO
/// import shows to be short, up to an equal per-agent share of that import.
Action greedy_policy(const Observation& observation, const GreedyParams& params = {});

/// Affine map from an observation to an action, squashed into Action ranges.
///
/// Parameters are stored row-major: 42 weights then the bias for the price
/// output, followed by the same for the quantity output.
class LinearPolicy {
public:
    static constexpr std::size_t kParamCount = 2 * (kObservationSize + 1);

    LinearPolicy() : params_(kParamCount, 0.0) {}
    /// Throws std::invalid_argument on wrong size or non-finite entries.
    explicit LinearPolicy(std::vector<double> params);

    Action act(const Observation& observation) const;
    const std::vector<double>& params() const { return params_; }

private:
    std::vector<double> params_;
};

/// Stateful per-episode controller for every agent of an environment.
class Policy {
public:
    virtual ~Policy() = default;
    /// Called once per episode after Environment::reset.
    virtual void begin_episode(const Environment& env) { (void)env; }
    virtual Action act(std::size_t agent_index, const Observation& observation) = 0;
    virtual std::string name() const = 0;
};

/// Independent uniform streams per agent, derived from the episode seed.
class ZiPolicy final : public Policy {
public:
    void begin_episode(const Environment& env) override;
    Action act(std::size_t agent_index, const Observation& observation) override;
    std::string name() const override { return "zi"; }

private:
    std::vector<Rng> streams_;
};

class GreedyPolicy final : public Policy {
public:
    explicit GreedyPolicy(GreedyParams params = {}) : params_(params) {}
    Action act(std::size_t agent_index, const Observation& observation) override;
    std::string name() const override { return "greedy"; }

private:
    GreedyParams params_;
};

/// One shared LinearPolicy, or one per agent.
class LinearPolicySet final : public Policy {
public:
    explicit LinearPolicySet(std::vector<LinearPolicy> policies, std::string name = "linear");
    Action act(std::size_t agent_index, const Observation& observation) override;
    std::string name() const override { return name_; }
    bool shared() const { return policies_.size() == 1; }

private:
    std::vector<LinearPolicy> policies_;
    std::string name_;
};

struct EpisodeResult {
    std::map<std::string, double> agent_returns;  // undiscounted sum of rewards
    double total_reward = 0.0;                    // sum over agents
    double p2p_volume_kwh = 0.0;                  // cleared P2P volume
    double dso_volume_kwh = 0.0;                  // residual volume settled with the DSO
    int steps = 0;

    /// Episode share of P2P volume; 0 when nothing traded.
    double p2p_trade_ratio() const {
        const double total = p2p_volume_kwh + dso_volume_kwh;
        return total > 0.0 ? p2p_volume_kwh / total : 0.0;
    }
};

using StepObserver = std::function<void(const StepResult&)>;

/// Resets `env` (with `seed` when given) and plays one episode to the end.
EpisodeResult run_episode(Environment& env, Policy& policy,
                          std::optional<std::uint64_t> seed = std::nullopt,
                          const StepObserver& on_step = {});

}  // namespace lem
