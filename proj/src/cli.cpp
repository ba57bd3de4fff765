#include "lem/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lem/artifacts.hpp"
#include "lem/cem.hpp"
#include "lem/config.hpp"
#include "lem/policies.hpp"

namespace lem::cli {

namespace fs = std::filesystem;

namespace {

/// Maps exceptions onto exit codes with a one-line diagnostic on stderr.
template <typename F>
int guarded(const char* command, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        fmt::print(stderr, "lem {}: config error: {}\n", command, e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        fmt::print(stderr, "lem {}: data error: {}\n", command, e.what());
        return kExitData;
    } catch (const std::exception& e) {
        fmt::print(stderr, "lem {}: {}\n", command, e.what());
        return kExitFailure;
    }
}

struct EpisodeArtifacts {
    std::vector<KpiRecord> kpis;
    double total_reward = 0.0;
};

std::unique_ptr<Policy> make_policy(const RunOptions& opts, const Scenario& scenario,
                                    const std::optional<Checkpoint>& checkpoint) {
    if (opts.policy == "zi") return std::make_unique<ZiPolicy>();
    if (opts.policy == "greedy") {
        GreedyParams p;
        p.bounds = scenario.episode.bounds;
        p.dso_penalty_coeff = scenario.weights.dso_penalty_coeff;
        p.grid_capacity_kw = scenario.episode.grid_capacity_kw;
        p.fleet_size = static_cast<int>(scenario.fleet.size());
        return std::make_unique<GreedyPolicy>(p);
    }
    return std::make_unique<LinearPolicySet>(
        policy_from_params(checkpoint->state.best_params, checkpoint->config.shared_policy));
}

EpisodeArtifacts run_one(const LoadedScenario& loaded, const Scenario& scenario,
                         const RunOptions& opts, const std::optional<Checkpoint>& checkpoint,
                         const std::string& checkpoint_hash, std::uint64_t seed, int episode) {
    Environment env(scenario, static_cast<std::uint64_t>(episode));
    auto policy = make_policy(opts, scenario, checkpoint);

    std::string trades;
    std::string kpis = kpi_csv_header() + "\n";
    std::string rewards;
    std::string agents;
    std::vector<Trade> all_trades;
    EpisodeArtifacts result;
    const EpisodeResult summary = run_episode(env, *policy, seed, [&](const StepResult& step) {
        const auto& ledger = step.ledger;
        for (const auto& t : ledger.trades) {
            trades += trade_json_line(t) + "\n";
            all_trades.push_back(t);
        }
        kpis += kpi_csv_row(ledger.step, step.kpis) + "\n";
        for (const auto& id : env.agent_ids())
            rewards += reward_json_line(ledger.step, id, step.rewards.at(id),
                                        agent_outcome(ledger, id)) + "\n";
        for (const auto& rec : ledger.agents) agents += agent_json_line(ledger.step, rec) + "\n";
        result.kpis.push_back(step.kpis);
    });
    result.total_reward = summary.total_reward;

    const fs::path dir = opts.out / fmt::format("episode_{:04d}", episode);
    const TradingNetwork network = build_network(all_trades, true);
    write_text(dir / "trades.jsonl", trades);
    write_text(dir / "kpis.csv", kpis);
    write_text(dir / "rewards.jsonl", rewards);
    write_text(dir / "agents.jsonl", agents);
    write_text(dir / "network.dot", network_dot(network));
    write_text(dir / "network.json", network_json(network));

    RunManifest manifest;
    manifest.config_path = fs::absolute(loaded.config_path).lexically_normal().string();
    manifest.config_hash = loaded.config_hash;
    manifest.input_hashes = loaded.input_hashes;
    manifest.seed = seed;
    manifest.instance_id = static_cast<std::uint64_t>(episode);
    manifest.episode = episode;
    manifest.policy = opts.policy == "checkpoint"
                          ? "checkpoint:" + fs::absolute(opts.checkpoint).lexically_normal().string()
                          : opts.policy;
    manifest.checkpoint_hash = checkpoint_hash;
    if (opts.dso_penalty) manifest.policy += fmt::format(" dso_penalty={}", format_number(*opts.dso_penalty));
    manifest.artifacts = {"trades.jsonl", "kpis.csv", "rewards.jsonl", "agents.jsonl",
                          "network.dot", "network.json"};
    write_text(dir / "manifest.json", manifest_json(manifest));
    return result;
}

}  // namespace

void init_logging() {
    auto logger = spdlog::get("lem");
    if (!logger) logger = spdlog::stderr_color_mt("lem");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("LEM_LOG_LEVEL"))
        spdlog::set_level(spdlog::level::from_str(level));
}

int cmd_run(const RunOptions& opts) {
    return guarded("run", [&] {
        if (opts.episodes < 1) throw ConfigError("--episodes", "must be >= 1");
        if (opts.parallel < 1) throw ConfigError("--parallel", "must be >= 1");
        if (opts.policy != "zi" && opts.policy != "greedy" && opts.policy != "checkpoint")
            throw ConfigError("--policy", "must be one of zi, greedy, checkpoint");

        const LoadedScenario loaded = load_scenario(opts.config);
        Scenario scenario = loaded.scenario;
        if (opts.dso_penalty) {
            if (!(*opts.dso_penalty >= 0.0)) throw ConfigError("--dso-penalty", "must be >= 0");
            scenario.weights.dso_penalty_coeff = *opts.dso_penalty;
        }
        std::optional<Checkpoint> checkpoint;
        std::string checkpoint_hash;
        if (opts.policy == "checkpoint") {
            if (opts.checkpoint.empty()) throw ConfigError("--checkpoint", "is required for policy checkpoint");
            const std::string text = read_file(opts.checkpoint, "--checkpoint");
            checkpoint = parse_checkpoint(text, opts.checkpoint.string());
            checkpoint_hash = fnv1a_hex(text);
            policy_from_params(checkpoint->state.best_params, checkpoint->config.shared_policy);
            if (!checkpoint->config.shared_policy &&
                checkpoint->state.best_params.size() !=
                    LinearPolicy::kParamCount * scenario.fleet.size())
                throw ConfigError("--checkpoint", "per-agent parameters do not match the fleet size");
            if (checkpoint->config_hash != loaded.config_hash)
                spdlog::warn("checkpoint was trained on config {}, running on {}",
                             checkpoint->config_hash, loaded.config_hash);
        }
        const std::uint64_t seed = opts.seed.value_or(scenario.episode.seed);

        std::vector<EpisodeArtifacts> episodes(static_cast<std::size_t>(opts.episodes));
        std::atomic<int> next{0};
        std::mutex error_mutex;
        std::exception_ptr error;
        auto worker = [&] {
            for (int k = next++; k < opts.episodes; k = next++) {
                try {
                    episodes[static_cast<std::size_t>(k)] =
                        run_one(loaded, scenario, opts, checkpoint, checkpoint_hash, seed, k);
                } catch (...) {
                    const std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        };
        const int threads = std::min(opts.parallel, opts.episodes);
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        }
        if (error) std::rethrow_exception(error);

        std::vector<KpiRecord> all_kpis;
        std::vector<double> rewards;
        for (const auto& e : episodes) {
            all_kpis.insert(all_kpis.end(), e.kpis.begin(), e.kpis.end());
            rewards.push_back(e.total_reward);
        }
        write_text(opts.out / "summary.csv", summary_csv(all_kpis, rewards));
        spdlog::info("run: {} episode(s) written to {}", opts.episodes, opts.out.string());
        return kExitOk;
    });
}

int cmd_train(const TrainOptions& opts) {
    return guarded("train", [&] {
        const LoadedScenario loaded = load_scenario(opts.config);

        CemConfig cfg;
        std::optional<CemState> resume;
        if (!opts.resume.empty()) {
            const Checkpoint ck = parse_checkpoint(read_file(opts.resume, "--resume"),
                                                   opts.resume.string());
            cfg = ck.config;
            if (ck.config_hash != loaded.config_hash)
                spdlog::warn("resuming a checkpoint trained on config {}", ck.config_hash);
            resume = ck.state;
            cfg.iterations = ck.state.iteration + opts.iterations;
        } else {
            cfg.population = opts.population;
            cfg.elite_fraction = opts.elite_fraction;
            cfg.iterations = opts.iterations;
            cfg.initial_std = opts.initial_std;
            cfg.extra_noise = opts.extra_noise;
            cfg.min_std = opts.min_std;
            cfg.episodes_per_candidate = opts.episodes_per_candidate;
            cfg.shared_policy = !opts.per_agent;
            cfg.seed = opts.seed.value_or(loaded.scenario.episode.seed);
            if (opts.fitness == "social") {
                cfg.fitness = FitnessMode::social;
            } else if (opts.fitness == "individual") {
                cfg.fitness = FitnessMode::individual;
            } else {
                throw ConfigError("--fitness", "must be social or individual");
            }
            cfg.focal_agent = opts.focal_agent;
        }
        cfg.threads = opts.parallel;
        try {
            validate(cfg);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("cem", e.what());
        }
        if (cfg.focal_agent >= loaded.scenario.fleet.size())
            throw ConfigError("--focal-agent", "out of range");

        const CemState state = cem_train(loaded.scenario, cfg, resume);
        write_text(opts.out / "checkpoint.json",
                   checkpoint_json(Checkpoint{cfg, state, loaded.config_hash}));
        write_text(opts.out / "learning_curve.csv", learning_curve_csv(state.curve));

        RunManifest manifest;
        manifest.config_path = fs::absolute(loaded.config_path).lexically_normal().string();
        manifest.config_hash = loaded.config_hash;
        manifest.input_hashes = loaded.input_hashes;
        manifest.seed = cfg.seed;
        manifest.policy = cfg.shared_policy ? "cem:linear" : "cem:linear-per-agent";
        manifest.artifacts = {"checkpoint.json", "learning_curve.csv"};
        write_text(opts.out / "manifest.json", manifest_json(manifest));
        return kExitOk;
    });
}

int cmd_network(const NetworkOptions& opts) {
    return guarded("network", [&] {
        if (opts.out.empty()) throw ConfigError("--out", "is required");
        const std::vector<Trade> trades = read_trade_log(opts.trades);
        const TradingNetwork network = build_network(trades, opts.p2p_only);
        fs::path dot = opts.out;
        fs::path json = opts.out;
        if (opts.out.extension() == ".json")
            dot.replace_extension(".dot");
        else
            json.replace_extension(".json");
        write_text(dot, network_dot(network));
        write_text(json, network_json(network));
        return kExitOk;
    });
}

}  // namespace lem::cli
