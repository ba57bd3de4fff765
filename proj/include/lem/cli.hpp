#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Applies LEM_LOG_LEVEL (trace, debug, info, warn, err, critical, off);
/// defaults to warn.
void init_logging();

struct RunOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;  // overrides episode.seed
    int episodes = 1;
    std::string policy = "zi";  // zi | greedy | checkpoint
    std::filesystem::path checkpoint;
    std::filesystem::path out = "runs";
    int parallel = 1;
    std::optional<double> dso_penalty;  // overrides reward.dso_penalty_coeff
};

/// Writes out/episode_NNNN/{trades.jsonl, kpis.csv, rewards.jsonl,
/// agents.jsonl, network.dot, network.json, manifest.json} and out/summary.csv.
/// Episode k uses the run seed on environment instance k.
int cmd_run(const RunOptions& options);

struct TrainOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "train";
    int population = 32;
    double elite_fraction = 0.25;
    int iterations = 30;  // further iterations when resuming
    double initial_std = 0.5;
    double extra_noise = 0.0;
    double min_std = 0.0;
    int episodes_per_candidate = 1;
    std::string fitness = "social";  // social | individual
    std::size_t focal_agent = 0;
    bool per_agent = false;
    std::filesystem::path resume;  // checkpoint to continue from
    int parallel = 1;
};

/// Writes out/checkpoint.json, out/learning_curve.csv and out/manifest.json.
int cmd_train(const TrainOptions& options);

struct NetworkOptions {
    std::filesystem::path trades;
    std::filesystem::path out;  // DOT; JSON goes next to it with a .json extension
    bool p2p_only = false;
};

int cmd_network(const NetworkOptions& options);

}  // namespace lem::cli
