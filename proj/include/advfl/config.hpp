#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "advfl/datagen.hpp"
#include "advfl/engine.hpp"

namespace advfl {

/// Invalid or unreadable configuration; the message names the offending field or path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::filesystem::path& path);

/// Applies "a.b.c=VALUE". VALUE is parsed as JSON when possible, otherwise kept as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);
/// Same for an already split key and value.
void set_dotted(nlohmann::json& config, const std::string& key, const nlohmann::json& value);
const nlohmann::json* find_dotted(const nlohmann::json& config, const std::string& key);

struct Experiment {
    nlohmann::json raw;
    FederationInstance instance;
    RunConfig run;
    std::filesystem::path out_dir;
    std::string prefix = "run";
    double tail_fraction = 0.5;
    std::vector<std::uint64_t> seeds;  // sweep seeds; first one is the master seed of `run`
};

/// Parses and validates a config document; relative instance paths resolve against `base_dir`.
Experiment parse_experiment(const nlohmann::json& config, const std::filesystem::path& base_dir = ".");

FederationInstance build_instance(const nlohmann::json& section, std::uint64_t default_seed,
                                  const std::filesystem::path& base_dir = ".");

std::string csv_header_comment(const nlohmann::json& config, std::uint64_t seed);
void write_jsonl(const std::filesystem::path& path, const nlohmann::json& config, std::uint64_t seed,
                 const std::vector<RoundLog>& trajectory);
void write_csv(const std::filesystem::path& path, const nlohmann::json& config, std::uint64_t seed,
               const std::vector<RoundLog>& trajectory);
std::string format_double(double v);

}  // namespace advfl
