#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "toalab/harness.hpp"
#include "toalab/model.hpp"

namespace toalab {

struct ExperimentConfig {
    std::vector<double> snrs_db = {0, 5, 10, 15, 20, 25, 30};
    int trials = 100;
    std::uint64_t seed = 1;
};

struct RunConfig {
    SystemConfig system;
    ChannelSpec channel;
    ExperimentConfig experiment;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// What a loaded configuration must be good for. Timing reports only need
// the frame/block layout, so e.g. a zero tail extension is acceptable there.
enum class ConfigUse { estimation, timing };

// Parses a JSON configuration document with optional top-level sections
// "system", "channel" and "experiment". Missing keys keep the defaults;
// unknown sections or keys raise ConfigError.
RunConfig parse_config(const std::string& json_text,
                       ConfigUse use = ConfigUse::estimation);

// Loads and parses the file; unreadable files raise ConfigError.
RunConfig load_config_file(const std::string& path,
                           ConfigUse use = ConfigUse::estimation);

} // namespace toalab
