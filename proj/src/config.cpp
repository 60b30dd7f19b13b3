#include "toalab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace toalab {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const char* section,
                         const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.contains(key)) {
            throw ConfigError(std::string("config: unknown key '") + key + "' in " + section);
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

void parse_system(const json& obj, SystemConfig& cfg) {
    if (!obj.is_object()) throw ConfigError("config: 'system' must be an object");
    reject_unknown_keys(obj, "system",
                        {"chip_duration_ns", "chips_per_frame", "blocks_per_frame",
                         "frames_step1", "frames_step2", "backward_search_chips",
                         "tail_extension_chips", "allsignal_lookback_chips", "pulse_energy",
                         "noise_psd", "num_correlators", "num_taps", "max_toa_chip",
                         "noise_only_threshold_sigma", "all_signal_threshold_sigma",
                         "max_retries", "max_shifts"});
    read(obj, "chip_duration_ns", cfg.chip_duration_ns);
    read(obj, "chips_per_frame", cfg.chips_per_frame);
    read(obj, "blocks_per_frame", cfg.blocks_per_frame);
    read(obj, "frames_step1", cfg.frames_step1);
    read(obj, "frames_step2", cfg.frames_step2);
    read(obj, "backward_search_chips", cfg.backward_search_chips);
    read(obj, "tail_extension_chips", cfg.tail_extension_chips);
    read(obj, "allsignal_lookback_chips", cfg.allsignal_lookback_chips);
    read(obj, "pulse_energy", cfg.pulse_energy);
    read(obj, "noise_psd", cfg.noise_psd);
    read(obj, "num_correlators", cfg.num_correlators);
    read(obj, "num_taps", cfg.num_taps);
    read(obj, "max_toa_chip", cfg.max_toa_chip);
    read(obj, "noise_only_threshold_sigma", cfg.noise_only_threshold_sigma);
    read(obj, "all_signal_threshold_sigma", cfg.all_signal_threshold_sigma);
    read(obj, "max_retries", cfg.max_retries);
    read(obj, "max_shifts", cfg.max_shifts);
}

void parse_channel(const json& obj, ChannelSpec& channel) {
    if (!obj.is_object()) throw ConfigError("config: 'channel' must be an object");
    reject_unknown_keys(obj, "channel",
                        {"preset", "arrival_probability", "nakagami_m", "mean_square_power",
                         "decay_per_chip"});
    if (obj.contains("preset")) {
        std::string name;
        read(obj, "preset", name);
        const auto preset = channel_preset(name);
        if (!preset) throw ConfigError("config: unknown channel preset '" + name + "'");
        channel = *preset;
    }
    read(obj, "arrival_probability", channel.theta.arrival_prob);
    read(obj, "nakagami_m", channel.theta.m);
    read(obj, "mean_square_power", channel.theta.omega);
    read(obj, "decay_per_chip", channel.decay_per_chip);
}

void parse_experiment(const json& obj, ExperimentConfig& exp) {
    if (!obj.is_object()) throw ConfigError("config: 'experiment' must be an object");
    reject_unknown_keys(obj, "experiment", {"snrs_db", "trials", "seed"});
    read(obj, "snrs_db", exp.snrs_db);
    read(obj, "trials", exp.trials);
    read(obj, "seed", exp.seed);
}

} // namespace

RunConfig parse_config(const std::string& json_text, ConfigUse use) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: document root must be an object");
    reject_unknown_keys(doc, "document root", {"system", "channel", "experiment"});

    RunConfig cfg;
    if (doc.contains("system")) parse_system(doc.at("system"), cfg.system);
    if (doc.contains("channel")) parse_channel(doc.at("channel"), cfg.channel);
    if (doc.contains("experiment")) parse_experiment(doc.at("experiment"), cfg.experiment);
    try {
        if (use == ConfigUse::timing) {
            cfg.system.validate_geometry();
        } else {
            cfg.system.validate();
            cfg.channel.theta.validate();
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.experiment.trials < 1) throw ConfigError("config: trials must be >= 1");
    if (cfg.experiment.snrs_db.empty()) throw ConfigError("config: snrs_db must be nonempty");
    return cfg;
}

RunConfig load_config_file(const std::string& path, ConfigUse use) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), use);
}

} // namespace toalab
