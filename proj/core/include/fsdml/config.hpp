#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fsdml/dml.hpp"
#include "fsdml/pipeline.hpp"

namespace fsdml {

/// Everything a command can be told, flattened into hyphenated keys that work
/// both in a key=value file and as --key flags.
struct RunConfig {
    PipelineConfig pipeline;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int k = 5;
    std::vector<int> ks{5, 10, 15};
    DmlMode mode = DmlMode::games_plus_generated;
    std::vector<DmlMode> modes{DmlMode::baseline, DmlMode::games_plus_generated};

    std::string ground;
    std::string real;      ///< k-shot real aerial set
    std::string val;
    std::string test;
    std::string games;
    std::string generated;
    std::string checkpoint;
    std::string warm_start;
    std::string data_dir;
    std::string out = "out";
};

struct ConfigKey {
    std::string name;
    std::string help;
    bool path = false; ///< excluded from the config hash
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

/// The registry, in output order.
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError naming the key when it is unknown or the value does not
/// parse.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Applies a flat `key = value` text ('#' starts a comment).
void apply_config_text(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::string& path);

/// Every key with its resolved value, one `key = value` line each.
std::string format_config(const RunConfig& config);

/// 16 hex digits over the non-path keys.
std::string config_hash(const RunConfig& config);

/// Runs every component validator; throws ConfigError.
void validate(const RunConfig& config);

} // namespace fsdml
