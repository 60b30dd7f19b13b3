#include "toalab/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace toalab {
namespace {

constexpr const char* kSweepCsvHeader =
    "snr_db,trials,rmse_chips,rmse_ns,mean_abs_error_chips,p_block_correct,p_within_1chip";

// shortest representation that round-trips exactly
std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error("csv: malformed number '" + std::string(s) + "'");
    }
    return v;
}

int parse_int(std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error("csv: malformed integer '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

nlohmann::json row_to_json(const SweepRow& r) {
    return nlohmann::json{
        {"snr_db", r.snr_db},
        {"trials", r.trials},
        {"rmse_chips", r.rmse_chips},
        {"rmse_ns", r.rmse_ns},
        {"mean_abs_error_chips", r.mean_abs_error_chips},
        {"p_block_correct", r.p_block_correct},
        {"p_within_1chip", r.p_within_1chip},
    };
}

} // namespace

std::optional<ChannelSpec> channel_preset(std::string_view name) {
    // qualitative LOS/NLOS analogues: LOS keeps a strong, lightly faded
    // leading cluster (higher m, faster decay); NLOS is denser and deeper
    // faded; office profiles decay faster than residential ones
    if (name == "residential-los") return ChannelSpec{{0.35, 2.0, 1.0}, 0.012};
    if (name == "residential-nlos") return ChannelSpec{{0.45, 1.0, 1.0}, 0.007};
    if (name == "office-los") return ChannelSpec{{0.30, 2.5, 1.0}, 0.025};
    if (name == "office-nlos") return ChannelSpec{{0.55, 1.2, 1.0}, 0.015};
    return std::nullopt;
}

std::vector<std::string> channel_preset_names() {
    return {"residential-los", "residential-nlos", "office-los", "office-nlos"};
}

double normalized_omega(const TapStatistics& theta, double decay_per_chip, int num_taps) {
    double tail_gain = 0.0;
    for (int j = 1; j < num_taps; ++j) tail_gain += std::exp(-decay_per_chip * j);
    return 1.0 / (1.0 + theta.arrival_prob * tail_gain);
}

std::uint64_t derive_trial_seed(std::uint64_t seed, double snr_db, int trial_index) {
    return mix_seed(seed, std::bit_cast<std::uint64_t>(snr_db),
                    static_cast<std::uint64_t>(trial_index));
}

TrialResult run_trial(const SystemConfig& cfg, const ChannelSpec& channel,
                      double snr_db, std::uint64_t seed) {
    cfg.validate();
    channel.theta.validate();
    SystemConfig run_cfg = cfg;
    run_cfg.noise_psd = cfg.pulse_energy / std::pow(10.0, snr_db / 10.0);
    TapStatistics theta = channel.theta;
    theta.omega = normalized_omega(theta, channel.decay_per_chip, run_cfg.num_taps);

    RandomStream rng(seed);
    const ChannelRealization ch = generate_channel(run_cfg, theta, rng, channel.decay_per_chip);
    TrialResult trial;
    trial.estimate = estimate_toa(run_cfg, ch, rng);
    trial.true_k = ch.toa_chip;
    trial.k_hat = trial.estimate.k_hat;
    trial.error_chips = trial.k_hat - trial.true_k;
    trial.error_ns = trial.error_chips * run_cfg.chip_duration_ns;
    return trial;
}

TrialResult run_trial(const SystemConfig& cfg, const TapStatistics& theta,
                      double snr_db, std::uint64_t seed) {
    return run_trial(cfg, ChannelSpec{theta, 0.0}, snr_db, seed);
}

SweepResult snr_sweep(const SystemConfig& cfg, const ChannelSpec& channel,
                      std::vector<double> snrs_db, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("snr_sweep: requires trials >= 1");
    if (snrs_db.empty()) throw std::invalid_argument("snr_sweep: requires at least one SNR");
    std::sort(snrs_db.begin(), snrs_db.end());

    const int block = cfg.chips_per_block();
    SweepResult result;
    for (double snr : snrs_db) {
        SweepRow row;
        row.snr_db = snr;
        row.trials = trials;
        double sum_sq = 0.0, sum_abs = 0.0;
        int block_correct = 0, within_1 = 0;
        for (int t = 0; t < trials; ++t) {
            const TrialResult tr = run_trial(cfg, channel, snr, derive_trial_seed(seed, snr, t));
            const double e = static_cast<double>(tr.error_chips);
            sum_sq += e * e;
            sum_abs += std::abs(e);
            if (tr.estimate.k_b_hat == tr.true_k / block) ++block_correct;
            if (std::abs(tr.error_chips) <= 1) ++within_1;
        }
        row.rmse_chips = std::sqrt(sum_sq / trials);
        row.rmse_ns = row.rmse_chips * cfg.chip_duration_ns;
        row.mean_abs_error_chips = sum_abs / trials;
        row.p_block_correct = static_cast<double>(block_correct) / trials;
        row.p_within_1chip = static_cast<double>(within_1) / trials;
        result.rows.push_back(row);
    }
    return result;
}

SweepResult snr_sweep(const SystemConfig& cfg, const TapStatistics& theta,
                      std::vector<double> snrs_db, int trials, std::uint64_t seed) {
    return snr_sweep(cfg, ChannelSpec{theta, 0.0}, std::move(snrs_db), trials, seed);
}

double acquisition_time_us(const SystemConfig& cfg) {
    cfg.validate_geometry();
    const int searched = cfg.chips_per_block() + cfg.backward_search_chips +
                         cfg.tail_extension_chips;
    const int rounds = (searched + cfg.num_correlators - 1) / cfg.num_correlators;
    const double frames = static_cast<double>(cfg.frames_step1) * cfg.blocks_per_frame +
                          static_cast<double>(rounds) * cfg.frames_step2;
    return frames * cfg.frame_time_ns() / 1000.0;
}

std::string sweep_to_csv(const SweepResult& result) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const SweepRow& r : result.rows) {
        out += format_double(r.snr_db);
        out += ',';
        out += std::to_string(r.trials);
        out += ',';
        out += format_double(r.rmse_chips);
        out += ',';
        out += format_double(r.rmse_ns);
        out += ',';
        out += format_double(r.mean_abs_error_chips);
        out += ',';
        out += format_double(r.p_block_correct);
        out += ',';
        out += format_double(r.p_within_1chip);
        out += '\n';
    }
    return out;
}

SweepResult sweep_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kSweepCsvHeader) {
        throw std::runtime_error("csv: missing or unexpected header");
    }
    SweepResult result;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 7) throw std::runtime_error("csv: expected 7 fields per row");
        SweepRow r;
        r.snr_db = parse_double(fields[0]);
        r.trials = parse_int(fields[1]);
        r.rmse_chips = parse_double(fields[2]);
        r.rmse_ns = parse_double(fields[3]);
        r.mean_abs_error_chips = parse_double(fields[4]);
        r.p_block_correct = parse_double(fields[5]);
        r.p_within_1chip = parse_double(fields[6]);
        result.rows.push_back(r);
    }
    return result;
}

std::string sweep_to_json(const SweepResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& r : result.rows) rows.push_back(row_to_json(r));
    return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

std::string trial_to_json(const SystemConfig& cfg, double snr_db, std::uint64_t seed,
                          const TrialResult& trial) {
    const ToaEstimate& e = trial.estimate;
    nlohmann::json j{
        {"snr_db", snr_db},
        {"seed", seed},
        {"true_k", trial.true_k},
        {"k_hat", trial.k_hat},
        {"error_chips", trial.error_chips},
        {"error_ns", trial.error_ns},
        {"k_b_hat", e.k_b_hat},
        {"theta_mm",
         {{"arrival_probability", e.theta_mm.arrival_prob},
          {"nakagami_m", e.theta_mm.m},
          {"mean_square_power", e.theta_mm.omega}}},
        {"noise_only_triggered", e.noise_only_triggered},
        {"all_signal_triggered", e.all_signal_triggered},
        {"retries_used", e.retries_used},
        {"shifts_used", e.shifts_used},
        {"degenerate", e.degenerate},
        {"window", {{"n_s", e.n_s}, {"n_e", e.n_e}, {"n_f", e.n_f}}},
        {"chip_duration_ns", cfg.chip_duration_ns},
        {"scores", e.scores},
    };
    return j.dump(2) + "\n";
}

std::string trial_to_csv(const TrialResult& trial) {
    const ToaEstimate& e = trial.estimate;
    std::string out =
        "true_k,k_hat,k_b_hat,error_chips,error_ns,noise_only_triggered,"
        "all_signal_triggered,retries_used,shifts_used,degenerate\n";
    out += std::to_string(trial.true_k) + ',' + std::to_string(trial.k_hat) + ',' +
           std::to_string(e.k_b_hat) + ',' + std::to_string(trial.error_chips) + ',' +
           format_double(trial.error_ns) + ',' + std::to_string(e.noise_only_triggered) + ',' +
           std::to_string(e.all_signal_triggered) + ',' + std::to_string(e.retries_used) + ',' +
           std::to_string(e.shifts_used) + ',' + std::to_string(e.degenerate) + '\n';
    return out;
}

} // namespace toalab
