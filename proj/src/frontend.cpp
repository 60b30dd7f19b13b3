#include "toalab/frontend.hpp"

#include <cmath>
#include <stdexcept>

namespace toalab {

EnergyObservation energy_blocks(const SystemConfig& cfg, const ChannelRealization& ch,
                                RandomStream& rng) {
    const int block = cfg.chips_per_block();
    const double noise_sigma = std::sqrt(cfg.noise_psd / 2.0);
    const double amp = std::sqrt(cfg.pulse_energy);
    const int num_taps = static_cast<int>(ch.taps.size());

    EnergyObservation obs;
    obs.y.assign(static_cast<std::size_t>(cfg.blocks_per_frame), 0.0);
    for (int frame = 0; frame < cfg.frames_step1; ++frame) {
        for (int chip = 0; chip < cfg.chips_per_frame; ++chip) {
            double x = noise_sigma * rng.normal();
            const int tap = chip - ch.toa_chip;
            if (tap >= 0 && tap < num_taps) x += amp * ch.taps[static_cast<std::size_t>(tap)];
            obs.y[static_cast<std::size_t>(chip / block)] += x * x;
        }
    }
    return obs;
}

CorrelationWindow correlate(const SystemConfig& cfg, const ChannelRealization& ch,
                            int n_s, int n_f, RandomStream& rng, int n_e) {
    if (n_s < 0 || n_f < n_s) {
        throw std::invalid_argument("correlate: requires 0 <= n_s <= n_f");
    }
    if (n_e < 0) n_e = std::max(n_s, n_f - cfg.tail_extension_chips);
    if (n_e < n_s || n_e > n_f) {
        throw std::invalid_argument("correlate: requires n_s <= n_e <= n_f");
    }

    const double sigma_n2 = cfg.frames_step2 * cfg.noise_psd / 2.0;
    const double sigma_n = std::sqrt(sigma_n2);
    const double gain = cfg.frames_step2 * std::sqrt(cfg.pulse_energy);
    const int num_taps = static_cast<int>(ch.taps.size());
    auto output_at = [&](int chip) {
        double z = sigma_n * rng.normal();
        const int tap = chip - ch.toa_chip;
        if (tap >= 0 && tap < num_taps) z += gain * ch.taps[static_cast<std::size_t>(tap)];
        return z;
    };

    CorrelationWindow w;
    w.n_s = n_s;
    w.n_e = n_e;
    w.n_f = n_f;
    w.sigma_n2 = sigma_n2;
    const int prefix_start = std::max(0, n_s - cfg.allsignal_lookback_chips);
    w.prefix.reserve(static_cast<std::size_t>(n_s - prefix_start));
    for (int chip = prefix_start; chip < n_s; ++chip) w.prefix.push_back(output_at(chip));
    w.z.reserve(static_cast<std::size_t>(n_f - n_s + 1));
    for (int chip = n_s; chip <= n_f; ++chip) w.z.push_back(output_at(chip));
    return w;
}

} // namespace toalab
