#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lem/env.hpp"

namespace lem {

/// Invalid or unreadable configuration. The message leads with the offending
/// field path, e.g. "episode.grid_capacity_kw: must be > 0".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Malformed data file content, located by file and 1-based line.
class DataError : public std::runtime_error {
public:
    DataError(std::string file, int line, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
          file_(std::move(file)),
          line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Throws ConfigError(field) when the file cannot be read.
std::string read_file(const std::filesystem::path& path, const std::string& field);

struct LoadedScenario {
    Scenario scenario;
    std::filesystem::path config_path;
    std::string config_hash;                         // over the config file bytes
    std::map<std::string, std::string> input_hashes;  // relative path -> digest
};

/// Loads a JSON config and the CSV files it references (paths relative to
/// the config file). Throws ConfigError or DataError.
LoadedScenario load_scenario(const std::filesystem::path& config_path);

}  // namespace lem
