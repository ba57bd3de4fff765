#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lem/cem.hpp"
#include "lem/exact_sum.hpp"
#include "lem/kpi.hpp"
#include "lem/ledger.hpp"
#include "lem/reward.hpp"

namespace lem {

inline constexpr std::string_view kEngineVersion = "0.1.0";

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// One JSON object per line with keys step, buyer, seller, price, quantity, layer.
std::string trade_json_line(const Trade& trade);
/// Throws std::invalid_argument describing the defect.
Trade parse_trade_line(std::string_view line);
/// Throws DataError with the 1-based line of the first malformed entry and
/// ConfigError when the file cannot be read. Blank lines are skipped.
std::vector<Trade> read_trade_log(const std::filesystem::path& path);

/// "step" followed by KpiRecord::field_names().
std::string kpi_csv_header();
std::string kpi_csv_row(int step, const KpiRecord& kpis);
/// Throws DataError on malformed rows.
std::vector<std::pair<int, KpiRecord>> read_kpi_csv(const std::filesystem::path& path);

/// Breakdown plus the settled outcome it was computed from.
std::string reward_json_line(int step, std::string_view agent_id, const RewardBreakdown& reward,
                             const AgentOutcome& outcome);
std::string agent_json_line(int step, const AgentStepRecord& record);

/// Directed seller -> buyer graph weighted by traded quantity.
struct TradingNetwork {
    std::set<std::string> nodes;
    std::map<std::pair<std::string, std::string>, double> weights;  // (seller, buyer)
    std::map<std::pair<std::string, std::string>, int> trade_counts;
    double total_weight = 0.0;  // correctly rounded sum of every included quantity
};

TradingNetwork build_network(std::span<const Trade> trades, bool p2p_only);
std::string network_dot(const TradingNetwork& network);
std::string network_json(const TradingNetwork& network);

struct RunManifest {
    std::string config_path;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;
    std::uint64_t seed = 0;
    std::uint64_t instance_id = 0;
    int episode = 0;
    std::string policy;
    std::string checkpoint_hash;  // empty unless the policy is a checkpoint
    std::vector<std::string> artifacts;
    std::string engine_version{kEngineVersion};
};

std::string manifest_json(const RunManifest& manifest);

/// Descriptive statistics (population sigma).
struct SummaryStats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};
SummaryStats summarize(std::span<const double> values);

/// metric,mean,std,min,max with one row per KPI plus episode_reward.
std::string summary_csv(std::span<const KpiRecord> kpis, std::span<const double> episode_rewards);

struct Checkpoint {
    CemConfig config;
    CemState state;
    std::string config_hash;
    std::string engine_version{kEngineVersion};
};

std::string checkpoint_json(const Checkpoint& checkpoint);
/// Throws DataError (line 1) on missing or mistyped fields.
Checkpoint parse_checkpoint(std::string_view text, const std::string& file = "checkpoint");

/// iteration,mean_fitness,elite_mean,best_fitness,mean_std,discarded
std::string learning_curve_csv(std::span<const CemIteration> curve);

/// Writes `text` to `path`, creating parent directories. Throws
/// std::runtime_error on I/O failure.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace lem
