#include "lem/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace lem {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return out;
}

std::string read_file(const fs::path& path, const std::string& field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(field, "cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace {

struct CsvTable {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::pair<int, std::vector<std::string>>> rows;  // (line, cells)
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

CsvTable parse_csv(const std::string& text, const std::string& file,
                   const std::vector<std::string>& expected_header) {
    CsvTable table{file, {}, {}};
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (table.header.empty()) {
            if (cells != expected_header) {
                std::string want;
                for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
                throw DataError(file, line_no, "expected header '" + want + "'");
            }
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != expected_header.size())
            throw DataError(file, line_no,
                            "expected " + std::to_string(expected_header.size()) + " fields, got " +
                                std::to_string(cells.size()));
        table.rows.emplace_back(line_no, std::move(cells));
    }
    if (table.header.empty()) throw DataError(file, 1, "missing header");
    return table;
}

double parse_number(const std::string& cell, const std::string& file, int line) {
    double value = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw DataError(file, line, "'" + cell + "' is not a finite number");
    return value;
}

int parse_hour(const std::string& cell, const std::string& file, int line, int expected) {
    int value = -1;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw DataError(file, line, "'" + cell + "' is not an hour index");
    if (value != expected)
        throw DataError(file, line, "expected hour " + std::to_string(expected) + ", got " + cell);
    return value;
}

void require_hours(const CsvTable& t) {
    if (t.rows.size() != static_cast<std::size_t>(kHorizon)) {
        const int line = t.rows.empty() ? 1 : t.rows.back().first;
        throw DataError(t.file, line,
                        "expected " + std::to_string(kHorizon) + " hourly rows, got " +
                            std::to_string(t.rows.size()));
    }
}

class JsonReader {
public:
    JsonReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
        if (!object_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        const std::set<std::string_view> allowed(keys);
        for (const auto& [key, _] : object_.items())
            if (!allowed.contains(key)) throw ConfigError(field(key), "unknown field");
    }

    bool has(const std::string& key) const { return object_.contains(key); }

    JsonReader child(const std::string& key) const { return {object_.at(key), field(key)}; }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const auto& v = object_.at(key);
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            throw ConfigError(field(key), "must be a finite number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        if (!has(key)) return fallback;
        const auto& v = object_.at(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const auto& v = object_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned()))
            throw ConfigError(field(key), "must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = object_.at(key);
        if (!v.is_boolean()) throw ConfigError(field(key), "must be a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key) const {
        if (!has(key)) throw ConfigError(field(key), "is required");
        const auto& v = object_.at(key);
        if (!v.is_string()) throw ConfigError(field(key), "must be a string");
        return v.get<std::string>();
    }

    std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

private:
    const json& object_;
    std::string path_;
};

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

EpisodeConfig parse_episode(const JsonReader& r) {
    r.allow_only({"max_steps", "seed", "grid_capacity_kw", "price_min", "price_max",
                  "quantity_max", "forecast_max_error", "async_orders", "initial_soc",
                  "kpi_window", "reputation_window", "loss_fraction"});
    EpisodeConfig e;
    const auto steps = r.integer("max_steps", e.max_steps);
    require(steps >= 1 && steps <= kHorizon, r.field("max_steps"),
            "must lie in [1, " + std::to_string(kHorizon) + "]");
    e.max_steps = static_cast<int>(steps);
    e.seed = r.unsigned_integer("seed", e.seed);
    e.grid_capacity_kw = r.number("grid_capacity_kw", e.grid_capacity_kw);
    require(e.grid_capacity_kw > 0.0, r.field("grid_capacity_kw"), "must be > 0");
    e.bounds.price_min = r.number("price_min", e.bounds.price_min);
    require(e.bounds.price_min > 0.0, r.field("price_min"), "must be > 0");
    e.bounds.price_max = r.number("price_max", e.bounds.price_max);
    require(e.bounds.price_max > e.bounds.price_min, r.field("price_max"),
            "must exceed price_min");
    e.bounds.quantity_max = r.number("quantity_max", e.bounds.quantity_max);
    require(e.bounds.quantity_max > 0.0, r.field("quantity_max"), "must be > 0");
    e.forecast_max_error = r.number("forecast_max_error", e.forecast_max_error);
    require(e.forecast_max_error >= 0.0 && e.forecast_max_error < 1.0,
            r.field("forecast_max_error"), "must lie in [0, 1)");
    e.async_orders = r.boolean("async_orders", e.async_orders);
    e.initial_soc = r.number("initial_soc", e.initial_soc);
    require(e.initial_soc >= 0.0 && e.initial_soc <= 1.0, r.field("initial_soc"),
            "must lie in [0, 1]");
    const auto kpi_window = r.integer("kpi_window", e.kpi_window);
    require(kpi_window >= 1 && kpi_window <= 1'000'000, r.field("kpi_window"), "must be >= 1");
    e.kpi_window = static_cast<int>(kpi_window);
    const auto rep_window = r.integer("reputation_window", e.reputation_window);
    require(rep_window >= 1 && rep_window <= 1'000'000, r.field("reputation_window"),
            "must be >= 1");
    e.reputation_window = static_cast<int>(rep_window);
    e.loss_fraction = r.number("loss_fraction", e.loss_fraction);
    require(e.loss_fraction >= 0.0 && e.loss_fraction <= 1.0, r.field("loss_fraction"),
            "must lie in [0, 1]");
    return e;
}

RewardWeights parse_reward(const JsonReader& r) {
    r.allow_only({"base_weights", "contribution_weights", "cooperation_weights",
                  "dso_penalty_coeff", "unmet_penalty_coeff"});
    RewardWeights w;
    auto weight = [](const JsonReader& g, const std::string& key, double fallback) {
        const double v = g.number(key, fallback);
        require(v >= 0.0, g.field(key), "must be >= 0");
        return v;
    };
    auto check_sum = [](const JsonReader& g, double sum) {
        require(std::abs(sum - 1.0) <= 1e-9, g.field("*"), "weights must sum to 1");
    };
    if (r.has("base_weights")) {
        const auto g = r.child("base_weights");
        g.allow_only({"economic", "grid_balance", "resource_alloc", "trading", "stability"});
        auto& b = w.base;
        b.economic = weight(g, "economic", b.economic);
        b.grid_balance = weight(g, "grid_balance", b.grid_balance);
        b.resource_alloc = weight(g, "resource_alloc", b.resource_alloc);
        b.trading = weight(g, "trading", b.trading);
        b.stability = weight(g, "stability", b.stability);
        check_sum(g, b.economic + b.grid_balance + b.resource_alloc + b.trading + b.stability);
    }
    if (r.has("contribution_weights")) {
        const auto g = r.child("contribution_weights");
        g.allow_only({"imbalance", "price_efficiency", "volume_share"});
        auto& c = w.contribution;
        c.imbalance = weight(g, "imbalance", c.imbalance);
        c.price_efficiency = weight(g, "price_efficiency", c.price_efficiency);
        c.volume_share = weight(g, "volume_share", c.volume_share);
        check_sum(g, c.imbalance + c.price_efficiency + c.volume_share);
    }
    if (r.has("cooperation_weights")) {
        const auto g = r.child("cooperation_weights");
        g.allow_only({"self_consumption", "coordination_score", "coordination_convergence"});
        auto& c = w.cooperation;
        c.self_consumption = weight(g, "self_consumption", c.self_consumption);
        c.coordination_score = weight(g, "coordination_score", c.coordination_score);
        c.coordination_convergence =
            weight(g, "coordination_convergence", c.coordination_convergence);
        check_sum(g, c.self_consumption + c.coordination_score + c.coordination_convergence);
    }
    w.dso_penalty_coeff = weight(r, "dso_penalty_coeff", w.dso_penalty_coeff);
    w.unmet_penalty_coeff = weight(r, "unmet_penalty_coeff", w.unmet_penalty_coeff);
    return w;
}

class InputFiles {
public:
    InputFiles(fs::path base, std::map<std::string, std::string>& hashes)
        : base_(std::move(base)), hashes_(hashes) {}

    std::string load(const fs::path& relative, const std::string& field) {
        const fs::path full = base_ / relative;
        std::string text = read_file(full, field);
        hashes_[fs::relative(full, base_).generic_string()] = fnv1a_hex(text);
        return text;
    }

    std::string display(const fs::path& relative) const { return (base_ / relative).string(); }

private:
    fs::path base_;
    std::map<std::string, std::string>& hashes_;
};

std::vector<AgentConfig> load_fleet(InputFiles& files, const fs::path& fleet_path) {
    const std::string fleet_file = files.display(fleet_path);
    const auto table = parse_csv(files.load(fleet_path, "files.fleet"), fleet_file,
                                 {"agent_id", "node_id", "capacity_kw", "battery_ratio", "profile"});
    if (table.rows.empty()) throw DataError(fleet_file, 1, "fleet has no agents");

    std::vector<AgentConfig> fleet;
    std::set<std::string> seen;
    for (const auto& [line, cells] : table.rows) {
        const std::string& id = cells[0];
        if (id.empty()) throw DataError(fleet_file, line, "empty agent_id");
        if (!seen.insert(id).second) throw DataError(fleet_file, line, "duplicate agent '" + id + "'");
        const double capacity = parse_number(cells[2], fleet_file, line);
        const double ratio = parse_number(cells[3], fleet_file, line);

        const fs::path profile_path = fleet_path.parent_path() / cells[4];
        const std::string profile_file = files.display(profile_path);
        const auto profile = parse_csv(files.load(profile_path, "files.fleet[" + id + "].profile"),
                                       profile_file, {"hour", "generation_kw", "demand_kw"});
        require_hours(profile);
        std::vector<double> gen;
        std::vector<double> dem;
        for (const auto& [pline, pcells] : profile.rows) {
            parse_hour(pcells[0], profile_file, pline, static_cast<int>(gen.size()));
            gen.push_back(parse_number(pcells[1], profile_file, pline));
            dem.push_back(parse_number(pcells[2], profile_file, pline));
        }
        try {
            fleet.push_back(make_agent(id, cells[1], capacity, ratio, std::move(gen), std::move(dem)));
        } catch (const std::invalid_argument& e) {
            throw DataError(fleet_file, line, e.what());
        }
    }
    return fleet;
}

GridTopology load_topology(InputFiles& files, const fs::path& path, double grid_capacity) {
    const std::string file = files.display(path);
    const auto table = parse_csv(files.load(path, "files.topology"), file,
                                 {"parent", "child", "capacity_kw"});
    std::vector<GridEdge> edges;
    for (const auto& [line, cells] : table.rows)
        edges.push_back({cells[0], cells[1], parse_number(cells[2], file, line)});
    try {
        return GridTopology(std::move(edges), grid_capacity);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("files.topology", e.what());
    }
}

DsoTariff load_tariff(InputFiles& files, const fs::path& path) {
    const std::string file = files.display(path);
    const auto table = parse_csv(files.load(path, "files.tariff"), file,
                                 {"hour", "feed_in", "utility"});
    require_hours(table);
    DsoTariff tariff;
    for (const auto& [line, cells] : table.rows) {
        parse_hour(cells[0], file, line, static_cast<int>(tariff.feed_in.size()));
        tariff.feed_in.push_back(parse_number(cells[1], file, line));
        tariff.utility.push_back(parse_number(cells[2], file, line));
    }
    return tariff;
}

}  // namespace

LoadedScenario load_scenario(const fs::path& config_path) {
    const std::string text = read_file(config_path, "config");
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    const JsonReader top(root, "");
    top.allow_only({"episode", "files", "reward"});
    require(top.has("files"), "files", "is required");

    const EpisodeConfig episode =
        top.has("episode") ? parse_episode(top.child("episode")) : EpisodeConfig{};
    const RewardWeights weights =
        top.has("reward") ? parse_reward(top.child("reward")) : RewardWeights{};

    const auto files_section = top.child("files");
    files_section.allow_only({"fleet", "topology", "tariff"});
    std::map<std::string, std::string> hashes;
    InputFiles files(config_path.parent_path(), hashes);
    auto fleet = load_fleet(files, files_section.string("fleet"));
    auto topology = load_topology(files, files_section.string("topology"), episode.grid_capacity_kw);
    auto tariff = load_tariff(files, files_section.string("tariff"));

    try {
        validate(tariff, episode.bounds);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("files.tariff", e.what());
    }
    for (const auto& agent : fleet)
        if (!topology.contains(agent.node_id))
            throw ConfigError("files.fleet", "agent '" + agent.agent_id + "' sits on unknown node '" +
                                                 agent.node_id + "'");

    LoadedScenario out{Scenario{episode, std::move(fleet), std::move(topology), std::move(tariff),
                                weights},
                       config_path, fnv1a_hex(text), std::move(hashes)};
    try {
        validate(out.scenario);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scenario", e.what());
    }
    return out;
}

}  // namespace lem
