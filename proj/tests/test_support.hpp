#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "lem/config.hpp"
#include "lem/env.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return LEM_DATA_DIR; }
inline std::filesystem::path default_config() { return data_dir() / "default.json"; }
inline std::filesystem::path lem_binary() { return LEM_BINARY; }

inline const lem::Scenario& default_scenario() {
    static const lem::Scenario scenario = lem::load_scenario(default_config()).scenario;
    return scenario;
}

/// Fresh, empty scratch directory unique to this process.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("lem_test_" + std::to_string(::getpid())) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::vector<std::string> lines_of(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

/// Two agents with flat profiles on a three-node feeder.
inline lem::Scenario flat_scenario(double gen_a, double dem_a, double gen_b, double dem_b) {
    lem::EpisodeConfig episode;
    episode.async_orders = false;
    episode.forecast_max_error = 0.0;
    std::vector<lem::AgentConfig> fleet{
        lem::make_agent("a", "n1", 100.0, 0.5, std::vector<double>(lem::kHorizon, gen_a),
                        std::vector<double>(lem::kHorizon, dem_a)),
        lem::make_agent("b", "n2", 100.0, 0.5, std::vector<double>(lem::kHorizon, gen_b),
                        std::vector<double>(lem::kHorizon, dem_b))};
    lem::GridTopology topology({{"root", "n1", 600.0}, {"n1", "n2", 600.0}},
                               episode.grid_capacity_kw);
    lem::DsoTariff tariff{std::vector<double>(lem::kHorizon, 60.0),
                          std::vector<double>(lem::kHorizon, 180.0)};
    return lem::Scenario{episode, std::move(fleet), std::move(topology), std::move(tariff), {}};
}

}  // namespace testing_support
