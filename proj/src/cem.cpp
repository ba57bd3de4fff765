#include "lem/cem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

namespace lem {

namespace {

constexpr std::uint64_t kSamplingStream = 7;

void evaluate_all(const CemObjective& objective, const std::vector<std::vector<double>>& candidates,
                  const CemConfig& config, std::vector<double>& fitness) {
    fitness.assign(candidates.size(), 0.0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++)
            fitness[i] = objective(candidates[i]);
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.threads),
                                               candidates.size());
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

int CemConfig::elite_count() const {
    return std::max(1, static_cast<int>(std::lround(elite_fraction * population)));
}

void validate(const CemConfig& c) {
    if (c.population < 4) throw std::invalid_argument("population must be >= 4");
    if (!(c.elite_fraction > 0.0 && c.elite_fraction <= 1.0))
        throw std::invalid_argument("elite_fraction must lie in (0, 1]");
    if (c.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (!(c.initial_std >= 0.0) || !std::isfinite(c.initial_std))
        throw std::invalid_argument("initial_std must be finite and >= 0");
    if (!(c.extra_noise >= 0.0) || !std::isfinite(c.extra_noise))
        throw std::invalid_argument("extra_noise must be finite and >= 0");
    if (!(c.min_std >= 0.0) || !std::isfinite(c.min_std))
        throw std::invalid_argument("min_std must be finite and >= 0");
    if (c.episodes_per_candidate < 1)
        throw std::invalid_argument("episodes_per_candidate must be >= 1");
    if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
}

std::size_t cem_dimension(const CemConfig& config, std::size_t agent_count) {
    return LinearPolicy::kParamCount * (config.shared_policy ? 1 : agent_count);
}

LinearPolicySet policy_from_params(const std::vector<double>& params, bool shared) {
    const std::size_t n = LinearPolicy::kParamCount;
    if (params.empty() || params.size() % n != 0 || (shared && params.size() != n))
        throw std::invalid_argument("parameter vector does not encode linear policies");
    std::vector<LinearPolicy> policies;
    for (std::size_t off = 0; off < params.size(); off += n)
        policies.emplace_back(std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(off),
                                                  params.begin() + static_cast<std::ptrdiff_t>(off + n)));
    return LinearPolicySet(std::move(policies), shared ? "linear" : "linear-per-agent");
}

double evaluate_params(const Scenario& scenario, const std::vector<double>& params,
                       const CemConfig& config) {
    LinearPolicySet policy = policy_from_params(params, config.shared_policy);
    double total = 0.0;
    for (int e = 0; e < config.episodes_per_candidate; ++e) {
        Environment env(scenario, static_cast<std::uint64_t>(e));
        const EpisodeResult r = run_episode(env, policy, config.seed);
        if (config.fitness == FitnessMode::social) {
            total += r.total_reward;
        } else {
            const auto& ids = env.agent_ids();
            if (config.focal_agent >= ids.size())
                throw std::invalid_argument("focal_agent out of range");
            total += r.agent_returns.at(ids[config.focal_agent]);
        }
    }
    return total / config.episodes_per_candidate;
}

CemState cem_train(const Scenario& scenario, const CemConfig& config,
                   std::optional<CemState> resume, const CemProgress& progress) {
    validate(config);
    validate(scenario);
    return cem_optimize(
        cem_dimension(config, scenario.fleet.size()), config,
        [&](const std::vector<double>& params) { return evaluate_params(scenario, params, config); },
        std::move(resume), progress);
}

CemState cem_optimize(std::size_t dim, const CemConfig& config, const CemObjective& objective,
                      std::optional<CemState> resume, const CemProgress& progress) {
    validate(config);
    if (dim == 0) throw std::invalid_argument("CEM dimension must be positive");

    CemState state;
    if (resume) {
        state = std::move(*resume);
        if (state.mean.size() != dim || state.stddev.size() != dim)
            throw std::invalid_argument("resumed state does not match the policy dimension");
    } else {
        state.mean.assign(dim, 0.0);
        state.stddev.assign(dim, config.initial_std);
    }

    const auto pop = static_cast<std::size_t>(config.population);
    const auto n_elite = static_cast<std::size_t>(config.elite_count());
    for (int it = state.iteration; it < config.iterations; ++it) {
        std::vector<std::vector<double>> candidates;
        std::vector<double> fitness;
        std::vector<double> carried_fitness;
        if (config.elitism && n_elite < pop) {
            candidates = state.elites;
            carried_fitness = state.elite_fitness;
        }
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(it), kSamplingStream));
        std::vector<std::vector<double>> fresh;
        while (candidates.size() + fresh.size() < pop) {
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j) x[j] = state.mean[j] + state.stddev[j] * rng.normal();
            fresh.push_back(std::move(x));
        }
        std::vector<double> fresh_fitness;
        evaluate_all(objective, fresh, config, fresh_fitness);
        fitness = std::move(carried_fitness);
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            candidates.push_back(std::move(fresh[i]));
            fitness.push_back(fresh_fitness[i]);
        }

        std::vector<std::size_t> order;
        int discarded = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (std::isfinite(fitness[i])) {
                order.push_back(i);
            } else {
                ++discarded;
                spdlog::warn("cem iteration {}: candidate {} has non-finite fitness, discarded", it, i);
            }
        }
        if (order.empty()) throw std::runtime_error("every CEM candidate returned non-finite fitness");
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
        order.resize(std::min(order.size(), n_elite));

        CemIteration record;
        record.iteration = it;
        record.discarded = discarded;
        std::vector<double> finite;
        for (double f : fitness)
            if (std::isfinite(f)) finite.push_back(f);
        record.mean_fitness = mean_of(finite);
        record.best_fitness = fitness[order.front()];

        state.elites.clear();
        state.elite_fitness.clear();
        for (std::size_t idx : order) {
            state.elites.push_back(candidates[idx]);
            state.elite_fitness.push_back(fitness[idx]);
        }
        record.elite_mean = mean_of(state.elite_fitness);
        if (record.best_fitness > state.best_fitness) {
            state.best_fitness = record.best_fitness;
            state.best_params = candidates[order.front()];
        }

        const double k = static_cast<double>(order.size());
        double std_sum = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double m = 0.0;
            for (const auto& e : state.elites) m += e[j];
            m /= k;
            double var = 0.0;
            for (const auto& e : state.elites) var += (e[j] - m) * (e[j] - m);
            state.mean[j] = m;
            state.stddev[j] = std::max(config.min_std, std::sqrt(var / k) + config.extra_noise);
            std_sum += state.stddev[j];
        }
        record.mean_std = std_sum / static_cast<double>(dim);
        state.iteration = it + 1;
        state.curve.push_back(record);
        spdlog::info("cem iteration {}: mean {:.4f} elite {:.4f} best {:.4f}", it,
                     record.mean_fitness, record.elite_mean, record.best_fitness);
        if (progress) progress(record);
    }
    if (state.best_params.empty()) state.best_params = state.mean;
    return state;
}

}  // namespace lem
