#pragma once

#include <vector>

#include "toalab/random.hpp"
#include "toalab/specfun.hpp"

namespace toalab {

// Frame/chip geometry, receiver resources and algorithm knobs.
// Timing layout: a frame of chips_per_frame chips (duration chip_duration_ns
// each) is split into blocks_per_frame blocks of chips_per_block() chips.
struct SystemConfig {
    double chip_duration_ns = 300.0 / 2250.0; // Tc
    int chips_per_frame = 2250;               // Nc
    int blocks_per_frame = 50;                // Nb
    int frames_step1 = 50;                    // N1, frames combined per energy block
    int frames_step2 = 25;                    // N2, frames per correlator output
    int backward_search_chips = 180;          // M1, backward extension of the search window
    int tail_extension_chips = 30;            // M2, extra correlated chips past the window
    int allsignal_lookback_chips = 10;        // M3, lookback chips for the all-signal guard
    double pulse_energy = 1.0;                // E
    double noise_psd = 1.0;                   // N0
    int num_correlators = 10;
    int num_taps = 200;                       // L, channel impulse response length in chips
    int max_toa_chip = 2050;                  // upper bound for the true arrival chip
    double noise_only_threshold_sigma = 3.0;  // q1
    double all_signal_threshold_sigma = 3.0;  // q2
    int max_retries = 2;                      // full reruns allowed on a noise-only verdict
    int max_shifts = 3;                       // backward window shifts allowed on an all-signal verdict

    int chips_per_block() const { return chips_per_frame / blocks_per_frame; } // B
    double frame_time_ns() const { return chip_duration_ns * chips_per_frame; } // Tf

    // Frame/block layout constraints only (what acquisition costing needs).
    // Throws std::invalid_argument naming the first violated invariant.
    void validate_geometry() const;
    // Full estimation-readiness: geometry plus energies, tap bounds, the
    // minimum moment-sample tail and guard thresholds.
    void validate() const;
};

// Reference parameter set: 300 ns frame, 2250 chips in 50 blocks of 45,
// 50 + 25 combined frames, 180-chip backward search, 10 parallel correlators.
SystemConfig reference_config();

// Per-chip tap arrival statistics: a tap beyond the first is present with
// probability arrival_prob, and present magnitudes are Nakagami(m, omega).
struct TapStatistics {
    double arrival_prob = 0.3; // p, in (0, 1]
    double m = 1.5;
    double omega = 1.0;

    NakagamiParams nakagami() const { return {m, omega}; }
    bool valid() const {
        return arrival_prob > 0.0 && arrival_prob <= 1.0 && nakagami().valid();
    }
    void validate() const; // throws std::invalid_argument
};

// One channel draw: the true arrival chip and the chip-spaced signed tap
// amplitudes. taps[0] (the first path) is always nonzero.
struct ChannelRealization {
    int toa_chip = 0;
    std::vector<double> taps;
};

// Draws the arrival chip uniformly on [0, max_toa_chip] and the taps per the
// arrival/fading statistics. decay_per_chip > 0 applies an exponential power
// profile omega_l = omega * exp(-decay_per_chip * (l-1)); the default 0 keeps
// the statistics stationary across the response.
ChannelRealization generate_channel(const SystemConfig& cfg, const TapStatistics& theta,
                                    RandomStream& rng, double decay_per_chip = 0.0);

} // namespace toalab
