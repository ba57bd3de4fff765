#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lem/env.hpp"
#include "lem/policies.hpp"

namespace lem {

enum class FitnessMode {
    social,     // sum of every agent's episodic reward
    individual  // episodic reward of the focal agent only
};

struct CemConfig {
    int population = 32;
    double elite_fraction = 0.25;
    int iterations = 30;
    double initial_std = 0.5;
    std::uint64_t seed = 42;
    double extra_noise = 0.0;  // added to the refit spread each iteration
    double min_std = 0.0;
    /// Previous elites occupy the first population slots (when fewer than
    /// the population), so the elite mean never decreases.
    bool elitism = true;
    FitnessMode fitness = FitnessMode::social;
    std::size_t focal_agent = 0;
    bool shared_policy = true;
    int episodes_per_candidate = 1;
    int threads = 1;

    int elite_count() const;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const CemConfig& config);

struct CemIteration {
    int iteration = 0;
    double mean_fitness = 0.0;   // over finite candidates
    double elite_mean = 0.0;
    double best_fitness = 0.0;   // best within the iteration
    double mean_std = 0.0;       // of the refit distribution
    int discarded = 0;           // candidates with non-finite fitness
};

/// Complete optimizer state; enough to resume bit-exactly.
struct CemState {
    std::vector<double> mean;
    std::vector<double> stddev;
    int iteration = 0;  // iterations completed
    std::vector<CemIteration> curve;
    std::vector<double> best_params;
    double best_fitness = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> elites;
    std::vector<double> elite_fitness;
};

/// Number of parameters searched: one LinearPolicy, or one per agent.
std::size_t cem_dimension(const CemConfig& config, std::size_t agent_count);

/// Splits a flat parameter vector into the policies it encodes.
LinearPolicySet policy_from_params(const std::vector<double>& params, bool shared);

/// Fitness of one parameter vector under common random numbers: episode e
/// runs with the configured seed on environment instance e.
double evaluate_params(const Scenario& scenario, const std::vector<double>& params,
                       const CemConfig& config);

using CemProgress = std::function<void(const CemIteration&)>;
/// Fitness of one parameter vector; must be safe to call concurrently.
using CemObjective = std::function<double(const std::vector<double>&)>;

/// Cross-entropy search over `dimension` parameters of an arbitrary
/// objective. Non-finite fitness values are discarded with a warning.
CemState cem_optimize(std::size_t dimension, const CemConfig& config, const CemObjective& objective,
                      std::optional<CemState> resume = std::nullopt,
                      const CemProgress& progress = {});

/// Runs (config.iterations - state.iteration) further iterations, starting
/// from `resume` when given. Deterministic for a fixed config and seed.
CemState cem_train(const Scenario& scenario, const CemConfig& config,
                   std::optional<CemState> resume = std::nullopt, const CemProgress& progress = {});

}  // namespace lem
