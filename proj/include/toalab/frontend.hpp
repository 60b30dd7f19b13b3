#pragma once

#include <vector>

#include "toalab/model.hpp"
#include "toalab/random.hpp"

namespace toalab {

// Per-block received energy, combined over frames_step1 frames.
struct EnergyObservation {
    std::vector<double> y; // blocks_per_frame entries, all >= 0
};

// Low-rate correlator outputs over chip delays [n_s, n_f], plus a short
// lookback prefix covering [max(0, n_s - allsignal_lookback_chips), n_s)
// that the all-signal guard test averages over.
struct CorrelationWindow {
    int n_s = 0; // first chip of the uncertainty region
    int n_e = 0; // last chip of the uncertainty region
    int n_f = 0; // last correlated chip (n_e + tail, possibly clamped)
    std::vector<double> z;      // outputs for chips n_s .. n_f
    std::vector<double> prefix; // outputs for the lookback chips before n_s
    double sigma_n2 = 0.0;      // output noise variance, frames_step2 * noise_psd / 2

    double at(int chip) const { return z[static_cast<std::size_t>(chip - n_s)]; }
    int prefix_start() const { return n_s - static_cast<int>(prefix.size()); }
};

// Block energies: one effective sample per chip per frame, x = sqrt(E) * tap
// + N(0, N0/2) noise, squared and accumulated over frames_step1 frames.
EnergyObservation energy_blocks(const SystemConfig& cfg, const ChannelRealization& ch,
                                RandomStream& rng);

// Correlator outputs z_i = N2 * sqrt(E) * alpha_{i-k+1} + eta_i for delays
// i in [n_s, n_f], eta i.i.d. N(0, N2*N0/2), independent of step-1 noise.
// n_e defaults to n_f - tail_extension_chips (floored at n_s); pass it
// explicitly when the tail was clamped at the frame edge.
CorrelationWindow correlate(const SystemConfig& cfg, const ChannelRealization& ch,
                            int n_s, int n_f, RandomStream& rng, int n_e = -1);

} // namespace toalab
