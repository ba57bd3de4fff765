#include "lem/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"
#include "lem/config.hpp"

namespace lem {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string format_number(double value) { return fmt::format("{}", value); }

std::string trade_json_line(const Trade& t) {
    ordered_json j;
    j["step"] = t.step;
    j["buyer"] = t.buyer_id;
    j["seller"] = t.seller_id;
    j["price"] = t.price;
    j["quantity"] = t.quantity;
    j["layer"] = std::string(to_string(t.layer));
    return j.dump();
}

namespace {

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return j.at(key);
}

double finite_number(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw std::invalid_argument(std::string("field '") + key + "' must be a finite number");
    return v.get<double>();
}

std::string string_field(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

double parse_double(std::string_view cell) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw std::invalid_argument("'" + std::string(cell) + "' is not a number");
    return value;
}

std::vector<double> number_array(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_array()) throw std::invalid_argument(std::string("field '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw std::invalid_argument(std::string("field '") + key + "' holds a non-number");
        out.push_back(x.get<double>());
    }
    return out;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

Trade parse_trade_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error&) {
        throw std::invalid_argument("not a JSON object");
    }
    if (!j.is_object()) throw std::invalid_argument("not a JSON object");
    Trade t;
    const auto& step = field(j, "step");
    if (!step.is_number_integer()) throw std::invalid_argument("field 'step' must be an integer");
    t.step = step.get<int>();
    t.buyer_id = string_field(j, "buyer");
    t.seller_id = string_field(j, "seller");
    t.price = finite_number(j, "price");
    t.quantity = finite_number(j, "quantity");
    if (t.quantity < 0.0) throw std::invalid_argument("field 'quantity' must be >= 0");
    t.layer = layer_from_string(string_field(j, "layer"));
    return t;
}

std::vector<Trade> read_trade_log(const fs::path& path) {
    const std::string text = read_file(path, "trades");
    std::istringstream in(text);
    std::string line;
    std::vector<Trade> trades;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            trades.push_back(parse_trade_line(line));
        } catch (const std::invalid_argument& e) {
            throw DataError(path.string(), line_no, e.what());
        }
    }
    return trades;
}

std::string kpi_csv_header() {
    std::string out = "step";
    for (auto name : KpiRecord::field_names()) out += "," + std::string(name);
    return out;
}

std::string kpi_csv_row(int step, const KpiRecord& kpis) {
    std::string out = std::to_string(step);
    for (double v : kpis.values()) out += "," + format_number(v);
    return out;
}

std::vector<std::pair<int, KpiRecord>> read_kpi_csv(const fs::path& path) {
    const std::string text = read_file(path, "kpis");
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::pair<int, KpiRecord>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kpi_csv_header()) throw DataError(path.string(), 1, "unexpected header");
            continue;
        }
        std::vector<double> cells;
        try {
            std::size_t start = 0;
            while (true) {
                const auto comma = line.find(',', start);
                cells.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        } catch (const std::invalid_argument& e) {
            throw DataError(path.string(), line_no, e.what());
        }
        if (cells.size() != KpiRecord::kFieldCount + 1)
            throw DataError(path.string(), line_no, "wrong number of fields");
        KpiRecord k;
        double* dst[] = {&k.social_welfare,        &k.liquidity,          &k.bid_ask_spread,
                         &k.price_volatility,      &k.imbalance,          &k.congestion,
                         &k.grid_balance,          &k.self_consumption,   &k.flexibility_utilization,
                         &k.coordination_score,    &k.coordination_convergence,
                         &k.p2p_trade_ratio,       &k.grid_balance_index};
        static_assert(std::size(dst) == KpiRecord::kFieldCount);
        for (std::size_t i = 0; i < KpiRecord::kFieldCount; ++i) *dst[i] = cells[i + 1];
        rows.emplace_back(static_cast<int>(cells[0]), k);
    }
    return rows;
}

std::string reward_json_line(int step, std::string_view agent_id, const RewardBreakdown& r,
                             const AgentOutcome& o) {
    ordered_json j;
    j["step"] = step;
    j["agent"] = std::string(agent_id);
    j["economic"] = r.economic;
    j["grid_balance_term"] = r.grid_balance_term;
    j["resource_alloc"] = r.resource_alloc;
    j["trading"] = r.trading;
    j["stability"] = r.stability;
    j["base"] = r.base;
    j["f_coop"] = r.f_coop;
    j["f_contrib"] = r.f_contrib;
    j["dso_penalty"] = r.dso_penalty;
    j["unmet_penalty"] = r.unmet_penalty;
    j["total"] = r.total;
    j["p2p_bought"] = o.trades.p2p_bought;
    j["p2p_sold"] = o.trades.p2p_sold;
    j["dso_bought"] = o.trades.dso_bought;
    j["dso_sold"] = o.trades.dso_sold;
    j["available_flex_kwh"] = o.available_flex_kwh;
    j["unmet_kwh"] = o.unmet_kwh;
    return j.dump();
}

std::string agent_json_line(int step, const AgentStepRecord& a) {
    ordered_json j;
    j["step"] = step;
    j["agent"] = a.agent_id;
    j["node"] = a.node_id;
    j["generation_kw"] = a.generation_kw;
    j["demand_kw"] = a.demand_kw;
    j["forecast_generation_kw"] = a.forecast_generation_kw;
    j["forecast_demand_kw"] = a.forecast_demand_kw;
    j["sellable_kwh"] = a.flex.sellable_kwh;
    j["buyable_kwh"] = a.flex.buyable_kwh;
    j["battery_charged_kwh"] = a.battery_charged_kwh;
    j["battery_discharged_kwh"] = a.battery_discharged_kwh;
    j["unmet_kwh"] = a.unmet_kwh;
    j["spilled_kwh"] = a.spilled_kwh;
    j["undelivered_p2p_kwh"] = a.undelivered_p2p_kwh;
    j["net_injection_kw"] = a.net_injection_kw;
    return j.dump();
}

TradingNetwork build_network(std::span<const Trade> trades, bool p2p_only) {
    TradingNetwork net;
    std::map<std::pair<std::string, std::string>, ExactSum> sums;
    ExactSum total;
    for (const auto& t : trades) {
        if (p2p_only && t.layer != Layer::p2p) continue;
        net.nodes.insert(t.seller_id);
        net.nodes.insert(t.buyer_id);
        const auto key = std::make_pair(t.seller_id, t.buyer_id);
        sums[key].add(t.quantity);
        ++net.trade_counts[key];
        total.add(t.quantity);
    }
    for (const auto& [key, sum] : sums) net.weights[key] = sum.value();
    net.total_weight = total.value();
    return net;
}

std::string network_dot(const TradingNetwork& net) {
    double max_weight = 0.0;
    for (const auto& [_, w] : net.weights) max_weight = std::max(max_weight, w);
    std::string out = "digraph trading_network {\n";
    for (const auto& node : net.nodes) out += "  " + quoted(node) + ";\n";
    for (const auto& [key, w] : net.weights) {
        const double width = max_weight > 0.0 ? 1.0 + 7.0 * w / max_weight : 1.0;
        out += fmt::format("  {} -> {} [weight={}, penwidth={:.3f}, label=\"{}\"];\n",
                           quoted(key.first), quoted(key.second), format_number(w), width,
                           format_number(w));
    }
    return out + "}\n";
}

std::string network_json(const TradingNetwork& net) {
    ordered_json j;
    j["nodes"] = ordered_json::array();
    for (const auto& node : net.nodes) j["nodes"].push_back(node);
    j["edges"] = ordered_json::array();
    for (const auto& [key, w] : net.weights) {
        ordered_json e;
        e["seller"] = key.first;
        e["buyer"] = key.second;
        e["weight"] = w;
        e["trades"] = net.trade_counts.at(key);
        j["edges"].push_back(std::move(e));
    }
    j["total_weight"] = net.total_weight;
    return j.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
    ordered_json j;
    j["engine_version"] = m.engine_version;
    j["config_path"] = m.config_path;
    j["config_hash"] = m.config_hash;
    j["input_hashes"] = m.input_hashes;
    j["seed"] = m.seed;
    j["instance_id"] = m.instance_id;
    j["episode"] = m.episode;
    j["policy"] = m.policy;
    if (!m.checkpoint_hash.empty()) j["checkpoint_hash"] = m.checkpoint_hash;
    j["artifacts"] = m.artifacts;
    return j.dump(2) + "\n";
}

SummaryStats summarize(std::span<const double> values) {
    SummaryStats s;
    if (values.empty()) return s;
    ExactSum sum;
    for (double v : values) sum.add(v);
    s.mean = sum.value() / static_cast<double>(values.size());
    ExactSum sq;
    for (double v : values) sq.add((v - s.mean) * (v - s.mean));
    s.stddev = std::sqrt(sq.value() / static_cast<double>(values.size()));
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

std::string summary_csv(std::span<const KpiRecord> kpis, std::span<const double> episode_rewards) {
    std::string out = "metric,mean,std,min,max\n";
    auto row = [&](std::string_view name, std::span<const double> values) {
        const auto s = summarize(values);
        out += fmt::format("{},{},{},{},{}\n", name, format_number(s.mean), format_number(s.stddev),
                           format_number(s.min), format_number(s.max));
    };
    const auto& names = KpiRecord::field_names();
    for (std::size_t i = 0; i < KpiRecord::kFieldCount; ++i) {
        std::vector<double> column;
        for (const auto& k : kpis) column.push_back(k.values()[i]);
        row(names[i], column);
    }
    row("episode_reward", episode_rewards);
    return out;
}

std::string checkpoint_json(const Checkpoint& c) {
    ordered_json j;
    j["engine_version"] = c.engine_version;
    j["config_hash"] = c.config_hash;
    j["seed"] = c.config.seed;
    j["shared_policy"] = c.config.shared_policy;
    j["iteration"] = c.state.iteration;
    j["parameters"] = c.state.best_params;
    if (std::isfinite(c.state.best_fitness)) j["best_fitness"] = c.state.best_fitness;
    else j["best_fitness"] = nullptr;
    ordered_json cfg;
    cfg["population"] = c.config.population;
    cfg["elite_fraction"] = c.config.elite_fraction;
    cfg["iterations"] = c.config.iterations;
    cfg["initial_std"] = c.config.initial_std;
    cfg["extra_noise"] = c.config.extra_noise;
    cfg["min_std"] = c.config.min_std;
    cfg["elitism"] = c.config.elitism;
    cfg["fitness"] = c.config.fitness == FitnessMode::social ? "social" : "individual";
    cfg["focal_agent"] = c.config.focal_agent;
    cfg["episodes_per_candidate"] = c.config.episodes_per_candidate;
    j["cem"] = std::move(cfg);
    j["mean"] = c.state.mean;
    j["stddev"] = c.state.stddev;
    j["elites"] = c.state.elites;
    j["elite_fitness"] = c.state.elite_fitness;
    j["curve"] = ordered_json::array();
    for (const auto& it : c.state.curve) {
        ordered_json e;
        e["iteration"] = it.iteration;
        e["mean_fitness"] = it.mean_fitness;
        e["elite_mean"] = it.elite_mean;
        e["best_fitness"] = it.best_fitness;
        e["mean_std"] = it.mean_std;
        e["discarded"] = it.discarded;
        j["curve"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text, const std::string& file) {
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw std::invalid_argument("checkpoint must be a JSON object");
        Checkpoint c;
        c.engine_version = string_field(j, "engine_version");
        c.config_hash = string_field(j, "config_hash");
        c.config.seed = field(j, "seed").get<std::uint64_t>();
        c.config.shared_policy = field(j, "shared_policy").get<bool>();
        c.state.iteration = field(j, "iteration").get<int>();
        c.state.best_params = number_array(j, "parameters");
        const auto& best = field(j, "best_fitness");
        c.state.best_fitness =
            best.is_null() ? -std::numeric_limits<double>::infinity() : best.get<double>();
        if (j.contains("cem")) {
            const auto& cfg = j.at("cem");
            c.config.population = field(cfg, "population").get<int>();
            c.config.elite_fraction = finite_number(cfg, "elite_fraction");
            c.config.iterations = field(cfg, "iterations").get<int>();
            c.config.initial_std = finite_number(cfg, "initial_std");
            c.config.extra_noise = finite_number(cfg, "extra_noise");
            c.config.min_std = finite_number(cfg, "min_std");
            c.config.elitism = field(cfg, "elitism").get<bool>();
            c.config.fitness = string_field(cfg, "fitness") == "individual" ? FitnessMode::individual
                                                                            : FitnessMode::social;
            c.config.focal_agent = field(cfg, "focal_agent").get<std::size_t>();
            c.config.episodes_per_candidate = field(cfg, "episodes_per_candidate").get<int>();
        }
        if (j.contains("mean")) c.state.mean = number_array(j, "mean");
        if (j.contains("stddev")) c.state.stddev = number_array(j, "stddev");
        if (j.contains("elites")) {
            for (const auto& e : j.at("elites")) c.state.elites.push_back(e.get<std::vector<double>>());
            c.state.elite_fitness = number_array(j, "elite_fitness");
        }
        if (j.contains("curve")) {
            for (const auto& e : j.at("curve")) {
                CemIteration it;
                it.iteration = field(e, "iteration").get<int>();
                it.mean_fitness = finite_number(e, "mean_fitness");
                it.elite_mean = finite_number(e, "elite_mean");
                it.best_fitness = finite_number(e, "best_fitness");
                it.mean_std = finite_number(e, "mean_std");
                it.discarded = field(e, "discarded").get<int>();
                c.state.curve.push_back(it);
            }
        }
        return c;
    } catch (const json::exception& e) {
        throw DataError(file, 1, e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(file, 1, e.what());
    }
}

std::string learning_curve_csv(std::span<const CemIteration> curve) {
    std::string out = "iteration,mean_fitness,elite_mean,best_fitness,mean_std,discarded\n";
    for (const auto& it : curve)
        out += fmt::format("{},{},{},{},{},{}\n", it.iteration, format_number(it.mean_fitness),
                           format_number(it.elite_mean), format_number(it.best_fitness),
                           format_number(it.mean_std), it.discarded);
    return out;
}

void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

}  // namespace lem
