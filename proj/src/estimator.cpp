#include "toalab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "toalab/specfun.hpp"

namespace toalab {
namespace {

constexpr double kMinArrivalProb = 1e-3;
constexpr double kMinShape = 0.5;
constexpr double kMaxShape = 50.0;
constexpr double kMinOmega = 1e-12;
constexpr int kMinMomentSamples = 10;

double clamp_tracked(double v, double lo, double hi, bool& moved) {
    const double c = std::clamp(v, lo, hi);
    // a clamp only counts as degeneracy when it moves the value materially
    if (std::abs(c - v) > 1e-9 * std::max(1.0, std::abs(v))) moved = true;
    return c;
}

MmFit mm_fallback(double g1) {
    MmFit fit;
    fit.theta.arrival_prob = 0.1;
    fit.theta.m = 1.0;
    fit.theta.omega = std::max(g1, kMinOmega) / 0.1;
    fit.degenerate = true;
    return fit;
}

// Scale factors of the signal-plus-noise density p2; formulas in the header.
struct DensityCoeffs {
    double log_nu1;
    double inv_nu2;
};

DensityCoeffs density_coeffs(const NakagamiParams& nak, double sigma_n2,
                             double pulse_energy, int n2) {
    const double en2 = pulse_energy * static_cast<double>(n2) * static_cast<double>(n2);
    const double s = 2.0 * en2 * nak.omega / (nak.m * sigma_n2);
    const double log_nu1 = std::log(2.0 * std::sqrt(std::numbers::pi)) +
                           log_gamma(2.0 * nak.m) - log_gamma(nak.m) -
                           log_gamma(nak.m + 0.5) - nak.m * std::log(4.0 + s);
    const double nu2 = 2.0 * sigma_n2 * (1.0 + 2.0 * nak.m * sigma_n2 / (en2 * nak.omega));
    return {log_nu1, 1.0 / nu2};
}

// ln(p * e^g + 1 - p) without overflow for large g.
double log_mixture(double log_p, double log_1mp, bool p_is_one, double g) {
    if (p_is_one) return g;
    const double a = log_p + g;
    const double hi = std::max(a, log_1mp);
    const double lo = std::min(a, log_1mp);
    return hi + std::log1p(std::exp(lo - hi));
}

struct ScoreContext {
    DensityCoeffs dc;
    double m;
    double log_p;
    double log_1mp;
    bool p_is_one;
};

ScoreContext make_score_context(const TapStatistics& theta, double sigma_n2,
                                double pulse_energy, int n2) {
    ScoreContext ctx;
    ctx.dc = density_coeffs(theta.nakagami(), sigma_n2, pulse_energy, n2);
    ctx.m = theta.m;
    ctx.p_is_one = theta.arrival_prob >= 1.0;
    ctx.log_p = std::log(theta.arrival_prob);
    ctx.log_1mp = ctx.p_is_one ? -std::numeric_limits<double>::infinity()
                               : std::log1p(-theta.arrival_prob);
    return ctx;
}

double score_with_context(const ScoreContext& ctx, const CorrelationWindow& w, int k) {
    const double zk = w.at(k);
    double score = ctx.dc.log_nu1 + log_kummer(ctx.m, 0.5, zk * zk * ctx.dc.inv_nu2);
    for (int i = k + 1; i <= w.n_f; ++i) {
        const double zi = w.at(i);
        const double g = ctx.dc.log_nu1 + log_kummer(ctx.m, 0.5, zi * zi * ctx.dc.inv_nu2);
        score += log_mixture(ctx.log_p, ctx.log_1mp, ctx.p_is_one, g);
    }
    return score;
}

double mean_square(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values) acc += v * v;
    return acc / static_cast<double>(values.size());
}

} // namespace

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax_lowest: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return static_cast<int>(best);
}

int coarse_step(const EnergyObservation& obs) {
    if (obs.y.empty()) throw std::invalid_argument("coarse_step: empty observation");
    return argmax_lowest(obs.y);
}

MmFit mm_from_moments(double mu2, double mu4, double mu6, double sigma_n2,
                      double pulse_energy, int n2) {
    const double en2 = pulse_energy * static_cast<double>(n2) * static_cast<double>(n2);
    const double s2 = sigma_n2;
    const double g1 = (mu2 - s2) / en2;
    if (!(g1 > 0.0)) return mm_fallback(g1);
    const double g2 = ((mu4 - 3.0 * s2 * s2) / g1 - 6.0 * en2 * s2) / (en2 * en2);
    const double g3 = ((mu6 - 15.0 * s2 * s2 * s2) / g1 - 15.0 * en2 * en2 * g2 * s2 -
                       45.0 * en2 * s2 * s2) / (en2 * en2 * en2);
    const double num = 2.0 * g2 * g2 - g3; // Omega^2 (m+1)/m
    const double den = g3 - g2 * g2;       // Omega^2 (m+1)/m^2
    if (!(g2 > 0.0) || !(num > 0.0) || !(den > 0.0)) return mm_fallback(g1);

    // Omega = g2 m/(m+1) and p = g1/Omega are the same algebra as
    // num/g2 and g1 g2/num while m is in range, and keep the triple
    // consistent when the shape has to be clamped.
    MmFit fit;
    fit.theta.m = clamp_tracked(num / den, kMinShape, kMaxShape, fit.degenerate);
    fit.theta.omega = clamp_tracked(g2 * fit.theta.m / (fit.theta.m + 1.0), kMinOmega,
                                    std::numeric_limits<double>::infinity(), fit.degenerate);
    fit.theta.arrival_prob =
        clamp_tracked(g1 / fit.theta.omega, kMinArrivalProb, 1.0, fit.degenerate);
    return fit;
}

MmFit mm_estimate(std::span<const double> z_tail, double sigma_n2,
                  double pulse_energy, int n2) {
    const std::size_t n = z_tail.size();
    if (n == 0) return mm_fallback(0.0);
    double mu2 = 0.0, mu4 = 0.0, mu6 = 0.0;
    for (double z : z_tail) {
        const double z2 = z * z;
        mu2 += z2;
        mu4 += z2 * z2;
        mu6 += z2 * z2 * z2;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    MmFit fit = mm_from_moments(mu2 * inv_n, mu4 * inv_n, mu6 * inv_n,
                                sigma_n2, pulse_energy, n2);
    if (n < static_cast<std::size_t>(kMinMomentSamples)) fit.degenerate = true;
    return fit;
}

double log_noise_density(double z, double sigma_n2) {
    return -0.5 * std::log(2.0 * std::numbers::pi * sigma_n2) - z * z / (2.0 * sigma_n2);
}

double log_nu1(const NakagamiParams& nak, double sigma_n2, double pulse_energy, int n2) {
    return density_coeffs(nak, sigma_n2, pulse_energy, n2).log_nu1;
}

double log_signal_density(double z, const NakagamiParams& nak, double sigma_n2,
                          double pulse_energy, int n2) {
    const DensityCoeffs dc = density_coeffs(nak, sigma_n2, pulse_energy, n2);
    return log_noise_density(z, sigma_n2) + dc.log_nu1 +
           log_kummer(nak.m, 0.5, z * z * dc.inv_nu2);
}

double gllr_score(int k, const CorrelationWindow& window, const TapStatistics& theta,
                  const SystemConfig& cfg) {
    if (k < window.n_s || k > window.n_e) {
        throw std::invalid_argument("gllr_score: hypothesis outside the uncertainty set");
    }
    const ScoreContext ctx =
        make_score_context(theta, window.sigma_n2, cfg.pulse_energy, cfg.frames_step2);
    return score_with_context(ctx, window, k);
}

double gllr_score_reference(int k, const CorrelationWindow& window,
                            const TapStatistics& theta, const SystemConfig& cfg) {
    if (k < window.n_s || k > window.n_e) {
        throw std::invalid_argument("gllr_score_reference: hypothesis outside the uncertainty set");
    }
    const NakagamiParams nak = theta.nakagami();
    const double p = theta.arrival_prob;
    auto log_p1 = [&](double z) { return log_noise_density(z, window.sigma_n2); };
    auto log_p2 = [&](double z) {
        return log_signal_density(z, nak, window.sigma_n2, cfg.pulse_energy, cfg.frames_step2);
    };
    double score = log_p2(window.at(k)) - log_p1(window.at(k));
    for (int i = k + 1; i <= window.n_f; ++i) {
        const double z = window.at(i);
        const double mix = p * std::exp(log_p2(z)) + (1.0 - p) * std::exp(log_p1(z));
        score += std::log(mix) - log_p1(z);
    }
    return score;
}

FineResult fine_step(const CorrelationWindow& window, const SystemConfig& cfg) {
    if (window.z.size() != static_cast<std::size_t>(window.n_f - window.n_s + 1) ||
        window.n_s > window.n_e || window.n_e > window.n_f) {
        throw std::invalid_argument("fine_step: malformed correlation window");
    }
    const int num_hyp = window.n_e - window.n_s + 1;
    FineResult result;
    result.scores.resize(static_cast<std::size_t>(num_hyp));
    std::vector<MmFit> fits(static_cast<std::size_t>(num_hyp));
    for (int k = window.n_s; k <= window.n_e; ++k) {
        const std::size_t idx = static_cast<std::size_t>(k - window.n_s);
        const std::span<const double> tail{window.z.data() + idx + 1,
                                           static_cast<std::size_t>(window.n_f - k)};
        fits[idx] = mm_estimate(tail, window.sigma_n2, cfg.pulse_energy, cfg.frames_step2);
        const ScoreContext ctx = make_score_context(fits[idx].theta, window.sigma_n2,
                                                    cfg.pulse_energy, cfg.frames_step2);
        result.scores[idx] = score_with_context(ctx, window, k);
    }
    const std::size_t best = static_cast<std::size_t>(argmax_lowest(result.scores));
    result.k_hat = window.n_s + static_cast<int>(best);
    result.theta = fits[best].theta;
    result.degenerate = fits[best].degenerate ||
                        (window.n_f - window.n_e < kMinMomentSamples);
    return result;
}

bool noise_only_test(const CorrelationWindow& window, int k_hat, const SystemConfig& cfg) {
    if (k_hat < window.n_s || k_hat > window.n_f) {
        throw std::invalid_argument("noise_only_test: k_hat outside the window");
    }
    const std::size_t idx = static_cast<std::size_t>(k_hat - window.n_s);
    const std::span<const double> tail{window.z.data() + idx, window.z.size() - idx};
    const double n = static_cast<double>(tail.size());
    const double q1 = cfg.noise_only_threshold_sigma;
    const double delta1 = window.sigma_n2 * (1.0 + q1 * std::sqrt(2.0 / n));
    return mean_square(tail) < delta1;
}

bool all_signal_test(const CorrelationWindow& window, int k_hat, const SystemConfig& cfg) {
    if (k_hat < window.n_s || k_hat > window.n_f) {
        throw std::invalid_argument("all_signal_test: k_hat outside the window");
    }
    // averaged range is [n_s - M3, k_hat - 1], the lookback prefix plus the
    // in-window outputs before the estimate
    const std::size_t count = window.prefix.size() + static_cast<std::size_t>(k_hat - window.n_s);
    if (count == 0) return false;
    double acc = 0.0;
    for (double v : window.prefix) acc += v * v;
    for (int i = window.n_s; i < k_hat; ++i) acc += window.at(i) * window.at(i);
    const double mean = acc / static_cast<double>(count);
    const double q2 = cfg.all_signal_threshold_sigma;
    const double delta2 = window.sigma_n2 * (1.0 + q2 * std::sqrt(2.0 / static_cast<double>(count)));
    return mean > delta2;
}

ToaEstimate estimate_toa(const SystemConfig& cfg, const ChannelRealization& ch,
                         RandomStream& rng) {
    cfg.validate();
    const int block = cfg.chips_per_block();
    const int last_chip = cfg.chips_per_frame - 1;

    ToaEstimate est;
    bool rerun_coarse = true;
    int n_s = 0, n_e = 0, n_f = 0;
    CorrelationWindow window;
    FineResult fine;

    for (;;) {
        if (rerun_coarse) {
            const EnergyObservation obs = energy_blocks(cfg, ch, rng);
            est.k_b_hat = coarse_step(obs);
            n_s = std::max(0, est.k_b_hat * block - cfg.backward_search_chips);
            n_e = (est.k_b_hat + 1) * block - 1;
            n_f = std::min(n_e + cfg.tail_extension_chips, last_chip);
            rerun_coarse = false;
        }
        window = correlate(cfg, ch, n_s, n_f, rng, n_e);
        fine = fine_step(window, cfg);

        if (noise_only_test(window, fine.k_hat, cfg)) {
            est.noise_only_triggered = true;
            if (est.retries_used < cfg.max_retries) {
                ++est.retries_used;
                rerun_coarse = true;
                continue;
            }
        }
        if (all_signal_test(window, fine.k_hat, cfg)) {
            est.all_signal_triggered = true;
            // shift the whole window one block towards the frame start
            if (est.shifts_used < cfg.max_shifts && n_e - block >= 0) {
                ++est.shifts_used;
                n_s = std::max(0, n_s - block);
                n_e -= block;
                n_f = std::min(n_e + cfg.tail_extension_chips, last_chip);
                continue;
            }
        }
        break;
    }

    est.k_hat = fine.k_hat;
    est.theta_mm = fine.theta;
    est.scores = std::move(fine.scores);
    est.degenerate = fine.degenerate;
    est.n_s = n_s;
    est.n_e = n_e;
    est.n_f = n_f;
    return est;
}

} // namespace toalab
