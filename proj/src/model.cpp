#include "toalab/model.hpp"

#include <stdexcept>
#include <string>

namespace toalab {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SystemConfig: ") + what);
}

} // namespace

void SystemConfig::validate_geometry() const {
    require(chip_duration_ns > 0.0, "chip_duration_ns must be > 0");
    require(chips_per_frame > 0, "chips_per_frame must be > 0");
    require(blocks_per_frame > 0, "blocks_per_frame must be > 0");
    require(chips_per_frame % blocks_per_frame == 0,
            "chips_per_frame must be a multiple of blocks_per_frame");
    require(frames_step1 > 0, "frames_step1 must be > 0");
    require(frames_step2 > 0, "frames_step2 must be > 0");
    require(backward_search_chips >= 0, "backward_search_chips must be >= 0");
    require(tail_extension_chips >= 0, "tail_extension_chips must be >= 0");
    require(allsignal_lookback_chips >= 0, "allsignal_lookback_chips must be >= 0");
    require(num_correlators >= 1, "num_correlators must be >= 1");
}

void SystemConfig::validate() const {
    validate_geometry();
    require(tail_extension_chips >= 10,
            "tail_extension_chips must be >= 10 (moment estimator sample floor)");
    require(pulse_energy > 0.0, "pulse_energy must be > 0");
    require(noise_psd > 0.0, "noise_psd must be > 0");
    require(num_taps >= 1, "num_taps must be >= 1");
    require(max_toa_chip >= 0, "max_toa_chip must be >= 0");
    require(max_toa_chip + num_taps <= chips_per_frame,
            "max_toa_chip + num_taps must not exceed chips_per_frame");
    require(noise_only_threshold_sigma > 0.0, "noise_only_threshold_sigma must be > 0");
    require(all_signal_threshold_sigma > 0.0, "all_signal_threshold_sigma must be > 0");
    require(max_retries >= 0, "max_retries must be >= 0");
    require(max_shifts >= 0, "max_shifts must be >= 0");
}

SystemConfig reference_config() {
    return SystemConfig{};
}

void TapStatistics::validate() const {
    if (!(arrival_prob > 0.0 && arrival_prob <= 1.0)) {
        throw std::invalid_argument("TapStatistics: arrival_prob must be in (0, 1]");
    }
    if (!nakagami().valid()) {
        throw std::invalid_argument("TapStatistics: requires m >= 0.5 and omega > 0");
    }
}

ChannelRealization generate_channel(const SystemConfig& cfg, const TapStatistics& theta,
                                    RandomStream& rng, double decay_per_chip) {
    cfg.validate();
    theta.validate();
    ChannelRealization ch;
    ch.toa_chip = rng.uniform_int(0, cfg.max_toa_chip);
    ch.taps.assign(static_cast<std::size_t>(cfg.num_taps), 0.0);
    for (int l = 0; l < cfg.num_taps; ++l) {
        // the first path is always present, later taps arrive with prob p
        if (l > 0 && rng.uniform() >= theta.arrival_prob) continue;
        NakagamiParams nak{theta.m, theta.omega};
        if (decay_per_chip != 0.0) nak.omega *= std::exp(-decay_per_chip * l);
        ch.taps[static_cast<std::size_t>(l)] = rng.sign() * sample_nakagami(nak, rng);
    }
    return ch;
}

} // namespace toalab
