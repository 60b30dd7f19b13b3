#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "toalab/estimator.hpp"
#include "toalab/model.hpp"

namespace toalab {

// Channel statistics plus the optional per-chip power decay.
struct ChannelSpec {
    TapStatistics theta;
    double decay_per_chip = 0.0;
};

// Named channel presets (qualitative analogues, not calibrated models):
// "residential-los", "residential-nlos", "office-los", "office-nlos".
std::optional<ChannelSpec> channel_preset(std::string_view name);
std::vector<std::string> channel_preset_names();

struct TrialResult {
    int true_k = 0;
    int k_hat = 0;
    int error_chips = 0;
    double error_ns = 0.0;
    ToaEstimate estimate;
};

struct SweepRow {
    double snr_db = 0.0;
    int trials = 0;
    double rmse_chips = 0.0;
    double rmse_ns = 0.0;
    double mean_abs_error_chips = 0.0;
    double p_block_correct = 0.0; // coarse block == true block
    double p_within_1chip = 0.0;  // |error| <= 1 chip
};

struct SweepResult {
    std::vector<SweepRow> rows; // sorted by snr_db ascending
};

// mean-square tap power that makes the channel's total expected gain one:
//   sum_l E{alpha_l^2} = omega * (1 + p * sum_{j=1}^{L-1} exp(-decay j)) = 1.
double normalized_omega(const TapStatistics& theta, double decay_per_chip, int num_taps);

// Trial seed = mix(master seed, SNR bit pattern, trial index); independent of
// execution order.
std::uint64_t derive_trial_seed(std::uint64_t seed, double snr_db, int trial_index);

// One seeded end-to-end trial. SNR is 10*log10(E/N0); the config's
// pulse_energy is kept and noise_psd is set accordingly, and omega is
// replaced by normalized_omega so the channel has unit expected gain.
TrialResult run_trial(const SystemConfig& cfg, const ChannelSpec& channel,
                      double snr_db, std::uint64_t seed);
TrialResult run_trial(const SystemConfig& cfg, const TapStatistics& theta,
                      double snr_db, std::uint64_t seed);

// Monte Carlo sweep: `trials` independent trials per SNR with derived seeds.
SweepResult snr_sweep(const SystemConfig& cfg, const ChannelSpec& channel,
                      std::vector<double> snrs_db, int trials, std::uint64_t seed);
SweepResult snr_sweep(const SystemConfig& cfg, const TapStatistics& theta,
                      std::vector<double> snrs_db, int trials, std::uint64_t seed);

// Acquisition time in microseconds: one energy detector sweeps the blocks
// serially over frames_step1 frames each, then num_correlators parallel
// correlators cover the B + M1 + M2 searched delays at frames_step2 frames
// per delay:
//   T = (N1*Nb + ceil((B + M1 + M2)/C) * N2) * Tf.
double acquisition_time_us(const SystemConfig& cfg);

// CSV with header
// snr_db,trials,rmse_chips,rmse_ns,mean_abs_error_chips,p_block_correct,p_within_1chip
// one row per SNR, '.' decimal separator, newline terminated. Doubles are
// printed shortest-round-trip, so parsing reproduces the rows exactly.
std::string sweep_to_csv(const SweepResult& result);
SweepResult sweep_from_csv(const std::string& text); // throws std::runtime_error
std::string sweep_to_json(const SweepResult& result);
std::string trial_to_json(const SystemConfig& cfg, double snr_db, std::uint64_t seed,
                          const TrialResult& trial);
std::string trial_to_csv(const TrialResult& trial);

// Fast invariant suite behind the `selftest` CLI subcommand. Prints one line
// per check; returns true when every check passes.
bool run_selftest(std::ostream& out);

} // namespace toalab
