#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "toalab/estimator.hpp"
#include "toalab/harness.hpp"

using namespace toalab;

namespace {

// Extended-precision evaluation of the per-hypothesis log-likelihood ratio,
// built from the raw density formulas and the series oracle only.
double oracle_gllr_score(int k, const CorrelationWindow& w, const TapStatistics& th,
                         const SystemConfig& cfg) {
    const long double m = th.m;
    const long double om = th.omega;
    const long double p = th.arrival_prob;
    const long double s2 = w.sigma_n2;
    const long double en2 = static_cast<long double>(cfg.pulse_energy) *
                            cfg.frames_step2 * cfg.frames_step2;
    const long double s = 2.0L * en2 * om / (m * s2);
    const long double log_nu1 = std::log(2.0L * std::sqrt(std::numbers::pi_v<long double>)) +
                                lgammal(2.0L * m) - lgammal(m) - lgammal(m + 0.5L) -
                                m * std::log(4.0L + s);
    const long double nu2 = 2.0L * s2 * (1.0L + 2.0L * m * s2 / (en2 * om));
    auto log_phi = [&](double z) {
        const double x = static_cast<double>(static_cast<long double>(z) * z / nu2);
        return static_cast<long double>(
            x == 0.0 ? 0.0 : oracle::log_kummer_series(th.m, 0.5, x));
    };
    long double score = log_nu1 + log_phi(w.at(k));
    for (int i = k + 1; i <= w.n_f; ++i) {
        const long double g = log_nu1 + log_phi(w.at(i));
        score += std::log(p * std::exp(g) + (1.0L - p));
    }
    return static_cast<double>(score);
}

CorrelationWindow random_fixture_window(RandomStream& rng, int n_hyp, int tail) {
    CorrelationWindow w;
    w.n_s = 0;
    w.n_e = n_hyp - 1;
    w.n_f = w.n_e + tail;
    w.sigma_n2 = 0.2 + 2.0 * rng.uniform();
    const double sigma = std::sqrt(w.sigma_n2);
    const int change = rng.uniform_int(0, w.n_e);
    for (int i = 0; i <= w.n_f; ++i) {
        double z = sigma * rng.normal();
        if (i >= change && rng.uniform() < 0.6) z += sigma * (1.0 + 4.0 * rng.uniform());
        w.z.push_back(z);
    }
    return w;
}

TapStatistics random_fixture_theta(RandomStream& rng) {
    return TapStatistics{0.05 + 0.95 * rng.uniform(), 0.5 + 4.5 * rng.uniform(),
                         0.05 + 3.0 * rng.uniform()};
}

ChannelRealization manual_channel(int k, std::vector<double> taps) {
    ChannelRealization ch;
    ch.toa_chip = k;
    ch.taps = std::move(taps);
    return ch;
}

} // namespace

TEST_CASE("coarse_step picks the maximum, lowest index on ties") {
    const EnergyObservation unique{{0.1, 5.2, 0.3}};
    CHECK(coarse_step(unique) == 1);
    const EnergyObservation tied{{2.0, 2.0}};
    CHECK(coarse_step(tied) == 0);
    const EnergyObservation single{{7.0}};
    CHECK(coarse_step(single) == 0);
    const EnergyObservation empty;
    CHECK_THROWS_AS(coarse_step(empty), std::invalid_argument);
}

TEST_CASE("argmax is invariant to positive scaling and additive shifts") {
    RandomStream rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> values(static_cast<std::size_t>(rng.uniform_int(1, 40)));
        for (double& v : values) v = rng.normal();
        const int base = argmax_lowest(values);

        const double scale = 0.01 + 10.0 * rng.uniform();
        std::vector<double> scaled = values;
        for (double& v : scaled) v *= scale;
        CHECK(argmax_lowest(scaled) == base);

        const double shift = 20.0 * rng.normal();
        std::vector<double> shifted = values;
        for (double& v : shifted) v += shift;
        CHECK(argmax_lowest(shifted) == base);
    }
}

TEST_CASE("moment fit recovers the population parameters exactly") {
    // closed-form even moments of z = N2 sqrt(E) alpha + eta:
    //   E z^2 = s2 + c p Om                       with c = E N2^2
    //   E z^4 = 3 s2^2 + 6 s2 c p Om + c^2 p Om^2 (m+1)/m
    //   E z^6 = 15 s2^3 + 45 s2^2 c p Om + 15 s2 c^2 p Om^2 (m+1)/m
    //           + c^3 p Om^3 (m+1)(m+2)/m^2
    SUBCASE("stated reference point") {
        const MmFit fit = mm_from_moments(2.5, 18.75, 224.25, 1.0, 1.0, 1);
        CHECK(!fit.degenerate);
        CHECK(fit.theta.arrival_prob == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(fit.theta.m == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(fit.theta.omega == doctest::Approx(3.0).epsilon(1e-9));
    }
    SUBCASE("full grid") {
        for (double p : {0.1, 0.5, 1.0}) {
            for (double m : {0.5, 1.0, 2.0, 5.0}) {
                for (double om : {0.5, 3.0}) {
                    CAPTURE(p);
                    CAPTURE(m);
                    CAPTURE(om);
                    const double s2 = 1.0;
                    const double mu2 = s2 + p * om;
                    const double mu4 = 3.0 * s2 * s2 + 6.0 * s2 * p * om +
                                       p * om * om * (m + 1.0) / m;
                    const double mu6 = 15.0 * s2 * s2 * s2 + 45.0 * s2 * s2 * p * om +
                                       15.0 * s2 * p * om * om * (m + 1.0) / m +
                                       p * om * om * om * (m + 1.0) * (m + 2.0) / (m * m);
                    const MmFit fit = mm_from_moments(mu2, mu4, mu6, s2, 1.0, 1);
                    CHECK(!fit.degenerate);
                    CHECK(fit.theta.arrival_prob == doctest::Approx(p).epsilon(1e-9));
                    CHECK(fit.theta.m == doctest::Approx(m).epsilon(1e-9));
                    CHECK(fit.theta.omega == doctest::Approx(om).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("moment fit is consistent on mixture samples") {
    const TapStatistics truth{0.4, 1.5, 1.0};
    const double sigma_n2 = 0.1;
    RandomStream rng(7);
    std::vector<double> z(1'000'000);
    for (double& zi : z) {
        zi = std::sqrt(sigma_n2) * rng.normal();
        if (rng.uniform() < truth.arrival_prob) {
            zi += rng.sign() * sample_nakagami(truth.nakagami(), rng);
        }
    }
    const MmFit fit = mm_estimate(z, sigma_n2, 1.0, 1);
    CHECK(!fit.degenerate);
    CHECK(std::abs(fit.theta.arrival_prob - truth.arrival_prob) / truth.arrival_prob < 0.05);
    CHECK(std::abs(fit.theta.omega - truth.omega) / truth.omega < 0.05);
    CHECK(std::abs(fit.theta.m - truth.m) / truth.m < 0.10);
}

TEST_CASE("moment fit degeneracy handling") {
    SUBCASE("all-zero tail") {
        const std::vector<double> z(64, 0.0);
        const MmFit fit = mm_estimate(z, 1.0, 1.0, 1);
        CHECK(fit.degenerate);
        CHECK(fit.theta.arrival_prob == doctest::Approx(0.1));
        CHECK(fit.theta.m == doctest::Approx(1.0));
    }
    SUBCASE("empty tail") {
        const MmFit fit = mm_estimate({}, 1.0, 1.0, 1);
        CHECK(fit.degenerate);
    }
    SUBCASE("short tail flags but still fits") {
        RandomStream rng(3);
        std::vector<double> z(5);
        for (double& zi : z) zi = rng.normal();
        CHECK(mm_estimate(z, 1.0, 1.0, 1).degenerate);
    }
}

TEST_CASE("gllr_score trivial limits") {
    const SystemConfig cfg = reference_config();
    SUBCASE("zero output, empty tail reduces to log nu1") {
        CorrelationWindow w;
        w.n_s = 0;
        w.n_e = 0;
        w.n_f = 0;
        w.z = {0.0};
        w.sigma_n2 = 1.0;
        const TapStatistics theta{0.5, 2.0, 1.5};
        const double expected =
            log_nu1(theta.nakagami(), w.sigma_n2, cfg.pulse_energy, cfg.frames_step2);
        CHECK(gllr_score(0, w, theta, cfg) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected < 0.0);
    }
    SUBCASE("vanishing tap power collapses the score to zero") {
        CorrelationWindow w;
        w.n_s = 0;
        w.n_e = 3;
        w.n_f = 9;
        w.sigma_n2 = 0.7;
        RandomStream rng(5);
        for (int i = 0; i < 10; ++i) w.z.push_back(rng.normal());
        const TapStatistics theta{0.4, 1.5, 1e-14};
        CHECK(std::abs(gllr_score(1, w, theta, cfg)) < 1e-6);
    }
}

TEST_CASE("score forms agree with each other and the oracle") {
    const SystemConfig cfg = reference_config();
    RandomStream rng(11);
    for (int fixture = 0; fixture < 100; ++fixture) {
        CAPTURE(fixture);
        const CorrelationWindow w = random_fixture_window(rng, 12, 14);
        const TapStatistics theta = random_fixture_theta(rng);
        const int k = rng.uniform_int(w.n_s, w.n_e);
        const double fast = gllr_score(k, w, theta, cfg);
        const double slow = gllr_score_reference(k, w, theta, cfg);
        const double ref = oracle_gllr_score(k, w, theta, cfg);
        const double scale = std::max({1.0, std::abs(fast), std::abs(ref)});
        CHECK(std::abs(fast - slow) < 1e-9 * scale);
        CHECK(std::abs(fast - ref) < 1e-9 * scale);
        CHECK(std::abs(slow - ref) < 1e-9 * scale);
    }
}

TEST_CASE("fine_step finds a clean change point") {
    SystemConfig cfg = reference_config();
    cfg.noise_psd = 1e-9;
    std::vector<double> taps(static_cast<std::size_t>(cfg.num_taps), 1.0);
    const auto ch = manual_channel(120, std::move(taps));
    RandomStream rng(13);
    const CorrelationWindow w = correlate(cfg, ch, 100, 175, rng);
    const FineResult fine = fine_step(w, cfg);
    CHECK(fine.k_hat == 120);
    CHECK(fine.scores.size() == static_cast<std::size_t>(w.n_e - w.n_s + 1));
}

TEST_CASE("fine_step scores equal a brute-force hypothesis loop") {
    const SystemConfig cfg = reference_config();
    RandomStream rng(17);
    for (int fixture = 0; fixture < 5; ++fixture) {
        const CorrelationWindow w = random_fixture_window(rng, 25, 20);
        const FineResult fine = fine_step(w, cfg);
        REQUIRE(fine.scores.size() == static_cast<std::size_t>(w.n_e - w.n_s + 1));
        for (int k = w.n_s; k <= w.n_e; ++k) {
            const std::span<const double> tail{w.z.data() + (k - w.n_s) + 1,
                                               static_cast<std::size_t>(w.n_f - k)};
            const MmFit fit = mm_estimate(tail, w.sigma_n2, cfg.pulse_energy, cfg.frames_step2);
            const double expected = gllr_score_reference(k, w, fit.theta, cfg);
            const double got = fine.scores[static_cast<std::size_t>(k - w.n_s)];
            CHECK(std::abs(got - expected) < 1e-9 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("fine_step locates the arrival within one chip at 30 dB") {
    const SystemConfig cfg = reference_config();
    const TapStatistics base{0.3, 1.5, 1.0};
    const double snr_db = 30.0;
    SystemConfig run_cfg = cfg;
    run_cfg.noise_psd = cfg.pulse_energy / std::pow(10.0, snr_db / 10.0);
    TapStatistics theta = base;
    theta.omega = normalized_omega(base, 0.0, cfg.num_taps);

    RandomStream rng(19);
    int qualifying = 0, within_one = 0;
    while (qualifying < 100) {
        const ChannelRealization ch = generate_channel(run_cfg, theta, rng);
        const EnergyObservation obs = energy_blocks(run_cfg, ch, rng);
        const int k_b = coarse_step(obs);
        const int block = run_cfg.chips_per_block();
        const int n_s = std::max(0, k_b * block - run_cfg.backward_search_chips);
        const int n_e = (k_b + 1) * block - 1;
        const int n_f = std::min(n_e + run_cfg.tail_extension_chips, run_cfg.chips_per_frame - 1);
        if (ch.toa_chip < n_s || ch.toa_chip > n_e) continue; // needs k inside the window
        ++qualifying;
        const CorrelationWindow w = correlate(run_cfg, ch, n_s, n_f, rng, n_e);
        const FineResult fine = fine_step(w, run_cfg);
        if (std::abs(fine.k_hat - ch.toa_chip) <= 1) ++within_one;
    }
    // recorded regression floor
    CHECK(within_one >= 90);
}

TEST_CASE("coarse_step finds the arrival block at 30 dB") {
    const SystemConfig cfg = reference_config();
    SystemConfig run_cfg = cfg;
    run_cfg.noise_psd = cfg.pulse_energy / 1000.0;

    SUBCASE("decaying profile: picked block holds or immediately follows the arrival") {
        // a decaying power profile concentrates the energy up front, so the
        // argmax block pins down the arrival itself (calibrated 991/1000)
        const double decay = 0.02;
        TapStatistics theta{0.3, 1.5, 1.0};
        theta.omega = normalized_omega(theta, decay, cfg.num_taps);
        RandomStream rng(23);
        int hits = 0;
        for (int t = 0; t < 100; ++t) {
            const ChannelRealization ch = generate_channel(run_cfg, theta, rng, decay);
            const EnergyObservation obs = energy_blocks(run_cfg, ch, rng);
            const int k_b = coarse_step(obs);
            const int true_block = ch.toa_chip / run_cfg.chips_per_block();
            if (k_b == true_block || k_b == true_block + 1) ++hits;
        }
        CHECK(hits >= 95);
    }

    SUBCASE("stationary profile: picked block stays within backward-search reach") {
        // with stationary taps every covered block has the same expected
        // energy, so the argmax wanders across the response; what the second
        // step needs is only that the M1-extended window still covers the
        // arrival (calibrated 1000/1000)
        TapStatistics theta{0.3, 1.5, 1.0};
        theta.omega = normalized_omega(theta, 0.0, cfg.num_taps);
        RandomStream rng(23);
        int covered = 0;
        for (int t = 0; t < 100; ++t) {
            const ChannelRealization ch = generate_channel(run_cfg, theta, rng);
            const EnergyObservation obs = energy_blocks(run_cfg, ch, rng);
            const int k_b = coarse_step(obs);
            const int block = run_cfg.chips_per_block();
            const int n_s = std::max(0, k_b * block - run_cfg.backward_search_chips);
            const int n_e = (k_b + 1) * block - 1;
            if (ch.toa_chip >= n_s && ch.toa_chip <= n_e) ++covered;
        }
        CHECK(covered >= 95);
    }
}

TEST_CASE("noise_only_test thresholds and calibration") {
    const SystemConfig cfg = reference_config();

    SUBCASE("mean exactly at the threshold does not trigger") {
        CorrelationWindow w;
        w.n_s = 0;
        w.n_e = 10;
        w.n_f = 40;
        w.sigma_n2 = 1.0;
        const double n = 41.0;
        const double delta1 = w.sigma_n2 *
            (1.0 + cfg.noise_only_threshold_sigma * std::sqrt(2.0 / n));
        w.z.assign(41, std::sqrt(delta1));
        CHECK(!noise_only_test(w, 0, cfg));
        // just below triggers
        w.z.assign(41, std::sqrt(delta1) * (1.0 - 1e-9));
        CHECK(noise_only_test(w, 0, cfg));
    }

    SUBCASE("pure-noise windows trigger most of the time") {
        SystemConfig run_cfg = cfg;
        run_cfg.noise_psd = 0.5;
        const auto far_channel = manual_channel(2000, std::vector<double>(200, 1.0));
        RandomStream rng(29);
        int triggered = 0;
        const int runs = 300;
        for (int r = 0; r < runs; ++r) {
            const CorrelationWindow w = correlate(run_cfg, far_channel, 0, 74, rng);
            const FineResult fine = fine_step(w, run_cfg);
            if (noise_only_test(w, fine.k_hat, run_cfg)) ++triggered;
        }
        CHECK(triggered > runs / 2);
    }

    SUBCASE("strong-signal windows never trigger") {
        SystemConfig run_cfg = cfg;
        run_cfg.noise_psd = 1e-3;
        const auto ch = manual_channel(10, std::vector<double>(200, 1.0));
        RandomStream rng(31);
        for (int r = 0; r < 300; ++r) {
            const CorrelationWindow w = correlate(run_cfg, ch, 0, 74, rng);
            CHECK(!noise_only_test(w, 10, run_cfg));
        }
    }
}

TEST_CASE("all_signal_test conventions and behavior") {
    const SystemConfig cfg = reference_config();

    SUBCASE("empty average never triggers") {
        CorrelationWindow w;
        w.n_s = 5;
        w.n_e = 20;
        w.n_f = 50;
        w.sigma_n2 = 1.0;
        w.z.assign(46, 100.0); // loud, but nothing before k_hat
        CHECK(!all_signal_test(w, 5, cfg)); // k_hat == n_s and no prefix
    }

    SUBCASE("window inside the signal region triggers at high SNR") {
        SystemConfig run_cfg = cfg;
        run_cfg.noise_psd = 1e-3;
        const auto ch = manual_channel(0, std::vector<double>(200, 1.0));
        RandomStream rng(37);
        int triggered = 0;
        for (int r = 0; r < 200; ++r) {
            const CorrelationWindow w = correlate(run_cfg, ch, 60, 134, rng);
            const FineResult fine = fine_step(w, run_cfg);
            if (all_signal_test(w, fine.k_hat, run_cfg)) ++triggered;
        }
        CHECK(triggered == 200);
    }

    SUBCASE("pure-noise prefix rarely triggers") {
        SystemConfig run_cfg = cfg;
        run_cfg.noise_psd = 1.0;
        const auto far_channel = manual_channel(2000, std::vector<double>(200, 1.0));
        RandomStream rng(41);
        int triggered = 0;
        const int runs = 1000;
        for (int r = 0; r < runs; ++r) {
            const CorrelationWindow w = correlate(run_cfg, far_channel, 100, 174, rng);
            if (all_signal_test(w, 135, run_cfg)) ++triggered; // fixed split, no selection bias
        }
        CHECK(triggered < 20); // ~0.4% expected at this averaging length
    }
}

TEST_CASE("estimate_toa is exact without noise") {
    SystemConfig cfg = reference_config();
    cfg.noise_psd = 1e-12;
    TapStatistics theta{0.3, 1.5, 1.0};
    theta.omega = normalized_omega(theta, 0.0, cfg.num_taps);
    RandomStream rng(43);
    for (int t = 0; t < 20; ++t) {
        const ChannelRealization ch = generate_channel(cfg, theta, rng);
        const ToaEstimate est = estimate_toa(cfg, ch, rng);
        CHECK(est.k_hat == ch.toa_chip);
    }
}

TEST_CASE("estimate output stays inside the final window") {
    const SystemConfig cfg = reference_config();
    TapStatistics theta{0.3, 1.5, 1.0};
    theta.omega = normalized_omega(theta, 0.0, cfg.num_taps);
    for (double snr_db : {-10.0, 5.0, 30.0}) {
        SystemConfig run_cfg = cfg;
        run_cfg.noise_psd = cfg.pulse_energy / std::pow(10.0, snr_db / 10.0);
        RandomStream rng(47);
        for (int t = 0; t < 30; ++t) {
            const ChannelRealization ch = generate_channel(run_cfg, theta, rng);
            const ToaEstimate est = estimate_toa(run_cfg, ch, rng);
            CHECK(est.n_s <= est.k_hat);
            CHECK(est.k_hat <= est.n_e);
            CHECK(est.scores.size() == static_cast<std::size_t>(est.n_e - est.n_s + 1));
            CHECK(est.retries_used <= run_cfg.max_retries);
            CHECK(est.shifts_used <= run_cfg.max_shifts);
            if (est.retries_used == 0 && est.shifts_used == 0) {
                // unshifted window construction from the coarse block
                const int block = run_cfg.chips_per_block();
                CHECK(est.n_s == std::max(0, est.k_b_hat * block -
                                                 run_cfg.backward_search_chips));
                CHECK(est.n_e == (est.k_b_hat + 1) * block - 1);
                CHECK(est.n_f == std::min(est.n_e + run_cfg.tail_extension_chips,
                                          run_cfg.chips_per_frame - 1));
            }
        }
    }
}

TEST_CASE("a clamped tail flags the fine step as degenerate") {
    // last-block window: the tail extension has no room past the frame edge
    const SystemConfig cfg = reference_config();
    const auto ch = manual_channel(2050, std::vector<double>(200, 1.0));
    RandomStream rng(59);
    const int n_e = cfg.chips_per_frame - 1;
    const int n_s = n_e - cfg.chips_per_block() + 1;
    const CorrelationWindow w = correlate(cfg, ch, n_s, n_e, rng, n_e);
    CHECK(w.n_f == w.n_e);
    const FineResult fine = fine_step(w, cfg);
    CHECK(fine.degenerate);
    CHECK(fine.k_hat >= w.n_s);
    CHECK(fine.k_hat <= w.n_e);
}

TEST_CASE("all-signal recovery: backward shifts rescue a late coarse pick") {
    // first path of moderate strength, dominant cluster two blocks later, and
    // a short backward search so the initial window misses the arrival
    SystemConfig cfg = reference_config();
    cfg.backward_search_chips = 45;
    cfg.noise_psd = 1e-3;
    std::vector<double> taps(static_cast<std::size_t>(cfg.num_taps), 0.0);
    taps[0] = 0.08;
    for (int l = 1; l < 90; ++l) taps[static_cast<std::size_t>(l)] = 0.35;
    for (int l = 90; l < 135; ++l) taps[static_cast<std::size_t>(l)] = 1.2;
    const int true_k = 450;
    const auto ch = manual_channel(true_k, taps);

    RandomStream rng(53);
    const int trials = 1000;
    int improved = 0, shifted = 0;
    for (int t = 0; t < trials; ++t) {
        // unshifted answer: first window only
        const EnergyObservation obs = energy_blocks(cfg, ch, rng);
        const int k_b = coarse_step(obs);
        const int block = cfg.chips_per_block();
        const int n_s = std::max(0, k_b * block - cfg.backward_search_chips);
        const int n_e = (k_b + 1) * block - 1;
        const int n_f = std::min(n_e + cfg.tail_extension_chips, cfg.chips_per_frame - 1);
        const CorrelationWindow w = correlate(cfg, ch, n_s, n_f, rng, n_e);
        const int unshifted_k = fine_step(w, cfg).k_hat;

        const ToaEstimate est = estimate_toa(cfg, ch, rng);
        if (est.shifts_used >= 1) ++shifted;
        if (std::abs(est.k_hat - true_k) < std::abs(unshifted_k - true_k)) ++improved;
    }
    // recorded regression floors
    CHECK(shifted >= trials * 9 / 10);
    CHECK(improved >= trials * 8 / 10);
}

TEST_CASE("noise-only retries fire when the coarse step lands on noise") {
    const SystemConfig cfg = reference_config();
    TapStatistics theta{0.3, 1.5, 1.0};
    theta.omega = normalized_omega(theta, 0.0, cfg.num_taps);
    SystemConfig run_cfg = cfg;
    run_cfg.noise_psd = cfg.pulse_energy / std::pow(10.0, -20.0 / 10.0); // -20 dB
    bool found = false;
    for (std::uint64_t seed = 1; seed <= 50 && !found; ++seed) {
        RandomStream rng(seed);
        const ChannelRealization ch = generate_channel(run_cfg, theta, rng);
        const ToaEstimate est = estimate_toa(run_cfg, ch, rng);
        found = est.noise_only_triggered && est.retries_used >= 1;
    }
    CHECK(found);
}
