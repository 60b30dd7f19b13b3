#include "toalab/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toalab/config.hpp"
#include "toalab/harness.hpp"

namespace toalab {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSelftest = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_snr_list(const std::string& text) {
    std::vector<double> snrs;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = std::min(text.find(',', start), text.size());
        const std::string_view item(text.data() + start, pos - start);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
            throw UsageError("--snr: malformed number '" + std::string(item) + "'");
        }
        snrs.push_back(v);
        start = pos + 1;
    }
    return snrs;
}

// full content is assembled first and placed with a rename, so a failing run
// never leaves a partial output file behind
void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot open output file '" + path + "'");
        out << content;
        if (!out.flush()) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw UsageError("failed writing output file '" + path + "'");
        }
    }
    fs::rename(tmp, target);
}

struct CommonOptions {
    std::string config_path;
    std::string snr_list;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_output) {
    cmd->add_option("--config", opt.config_path, "configuration file (JSON)");
    cmd->add_option("--snr", opt.snr_list, "SNR list in dB, comma separated");
    cmd->add_option("--trials", opt.trials, "trials per SNR");
    cmd->add_option("--seed", opt.seed, "master seed");
    if (with_output) {
        cmd->add_option("--out", opt.out_path, "output file (default: stdout)");
        cmd->add_option("--format", opt.format, "output format")
            ->check(CLI::IsMember({"csv", "json"}));
    }
}

RunConfig resolve_config(const CommonOptions& opt, ConfigUse use = ConfigUse::estimation) {
    RunConfig cfg;
    if (!opt.config_path.empty()) cfg = load_config_file(opt.config_path, use);
    if (!opt.snr_list.empty()) cfg.experiment.snrs_db = parse_snr_list(opt.snr_list);
    if (opt.trials) cfg.experiment.trials = *opt.trials;
    if (opt.seed) cfg.experiment.seed = *opt.seed;
    if (cfg.experiment.trials < 1) throw UsageError("--trials must be >= 1");
    if (cfg.experiment.snrs_db.empty()) throw UsageError("--snr list must be nonempty");
    return cfg;
}

int run_sweep(const CommonOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    const SweepResult result = snr_sweep(cfg.system, cfg.channel, cfg.experiment.snrs_db,
                                         cfg.experiment.trials, cfg.experiment.seed);
    write_output(opt.out_path, opt.format == "json" ? sweep_to_json(result)
                                                    : sweep_to_csv(result));
    return kExitOk;
}

int run_one_trial(const CommonOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    if (cfg.experiment.snrs_db.size() != 1) {
        throw UsageError("trial: exactly one SNR value is required");
    }
    const double snr = cfg.experiment.snrs_db.front();
    const std::uint64_t seed = cfg.experiment.seed;
    const TrialResult trial = run_trial(cfg.system, cfg.channel, snr, seed);
    write_output(opt.out_path, opt.format == "json"
                                   ? trial_to_json(cfg.system, snr, seed, trial)
                                   : trial_to_csv(trial));
    return kExitOk;
}

int run_timing(const CommonOptions& opt) {
    const RunConfig cfg = resolve_config(opt, ConfigUse::timing);
    const double us = acquisition_time_us(cfg.system);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "acquisition time: %.6g us\n", us);
    std::cout << buf;
    return kExitOk;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"toalab: two-step TOA estimation laboratory for IR-UWB ranging"};
    app.require_subcommand(1);

    CommonOptions sweep_opt, trial_opt, timing_opt;
    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo RMSE-vs-SNR sweep");
    add_common(sweep, sweep_opt, true);
    CLI::App* trial = app.add_subcommand("trial", "single seeded trial with diagnostics");
    add_common(trial, trial_opt, true);
    CLI::App* timing = app.add_subcommand("timing", "acquisition-time report");
    add_common(timing, timing_opt, false);
    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sweep->parsed()) return run_sweep(sweep_opt);
        if (trial->parsed()) return run_one_trial(trial_opt);
        if (timing->parsed()) return run_timing(timing_opt);
        if (selftest->parsed()) return run_selftest(std::cout) ? kExitOk : kExitSelftest;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace toalab
