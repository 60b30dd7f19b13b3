#pragma once

#include <span>
#include <vector>

#include "toalab/frontend.hpp"
#include "toalab/model.hpp"

namespace toalab {

// Index of the largest element; exact ties resolve to the lowest index.
int argmax_lowest(std::span<const double> values);

// Step 1: pick the block with the largest combined energy.
// Throws std::invalid_argument on an empty observation.
int coarse_step(const EnergyObservation& obs);

// Method-of-moments fit of the tap statistics. degenerate is set when the
// sample moments were infeasible (fallback used) or a clamp moved a value.
struct MmFit {
    TapStatistics theta;
    bool degenerate = false;
};

// Fit from raw even sample moments mu2, mu4, mu6 of the post-change outputs.
// Moment inversion:
//   g1 = (mu2 - s2) / (E N2^2)                                  -> p*Omega
//   g2 = ((mu4 - 3 s2^2)/g1 - 6 E N2^2 s2) / (E N2^2)^2         -> Omega (m+1)/m
//   g3 = ((mu6 - 15 s2^3)/g1 - 15 (E N2^2)^2 g2 s2
//         - 45 E N2^2 s2^2) / (E N2^2)^3                        -> Omega^2 (m+1)(m+2)/m^2
//   p = g1 g2 / (2 g2^2 - g3),  m = (2 g2^2 - g3)/(g3 - g2^2),
//   Omega = (2 g2^2 - g3)/g2.
// Results are clamped to p in [1e-3, 1], m in [0.5, 50], Omega >= 1e-12.
// Infeasible moments (g1 <= 0, g2 <= 0, 2 g2^2 - g3 <= 0 or g3 - g2^2 <= 0)
// fall back to theta = (0.1, 1, max(g1, 1e-12)/0.1) with the flag set.
MmFit mm_from_moments(double mu2, double mu4, double mu6, double sigma_n2,
                      double pulse_energy, int n2);

// Fit from the post-change outputs themselves. Fewer than 10 samples flags
// the result as degenerate; an empty or all-zero tail yields the fallback.
MmFit mm_estimate(std::span<const double> z_tail, double sigma_n2,
                  double pulse_energy, int n2);

// log density of a noise-only correlator output, N(0, sigma_n2).
double log_noise_density(double z, double sigma_n2);

// log density of a signal-plus-noise output N2 sqrt(E) d|alpha| + eta with
// |alpha| Nakagami(m, omega) and d = +-1 equiprobable:
//   p2(z) = nu1 / (sqrt(2 pi) sigma) * exp(-z^2/(2 sigma^2))
//               * Phi(m, 1/2; z^2 / nu2),
//   nu1 = 2 sqrt(pi) G(2m) / (G(m) G(m+1/2)) * (4 + 2 E N2^2 omega/(m s2))^-m,
//   nu2 = 2 s2 (1 + 2 m s2 / (E N2^2 omega)).
double log_signal_density(double z, const NakagamiParams& nak, double sigma_n2,
                          double pulse_energy, int n2);

// ln nu1 alone (equals 0 when the signal term vanishes).
double log_nu1(const NakagamiParams& nak, double sigma_n2, double pulse_energy, int n2);

// Generalized LLR score of the hypothesis "the first path arrives at chip k":
//   S_k = ln[nu1 Phi(m, 1/2; z_k^2/nu2)]
//       + sum_{i=k+1}^{n_f} ln[p nu1 Phi(m, 1/2; z_i^2/nu2) + 1 - p],
// evaluated in the log domain throughout. Requires n_s <= k <= n_e.
double gllr_score(int k, const CorrelationWindow& window, const TapStatistics& theta,
                  const SystemConfig& cfg);

// Same score computed the slow way from the mixture of linear-domain
// densities; kept as an independent route for self-checks.
double gllr_score_reference(int k, const CorrelationWindow& window,
                            const TapStatistics& theta, const SystemConfig& cfg);

struct FineResult {
    int k_hat = 0;
    TapStatistics theta;
    std::vector<double> scores; // one per hypothesis n_s .. n_e
    bool degenerate = false;    // winning fit degenerate, or clamped tail < 10
};

// Step 2: refit the tap statistics per hypothesis from {z_i, i > k} and
// score each; returns the arg max (lowest index on ties).
FineResult fine_step(const CorrelationWindow& window, const SystemConfig& cfg);

// Noise-only guard: mean of z_i^2 over i in [k_hat, n_f] below
// sigma_n2 * (1 + q1 sqrt(2/N)) flags the block as noise-only.
bool noise_only_test(const CorrelationWindow& window, int k_hat, const SystemConfig& cfg);

// All-signal guard: mean of z_i^2 over the lookback prefix and
// [n_s, k_hat - 1] above sigma_n2 * (1 + q2 sqrt(2/N')) flags the block as
// holding signal before the estimate. An empty range never triggers.
bool all_signal_test(const CorrelationWindow& window, int k_hat, const SystemConfig& cfg);

struct ToaEstimate {
    int k_hat = 0;
    int k_b_hat = 0;
    TapStatistics theta_mm;
    std::vector<double> scores;
    bool noise_only_triggered = false;
    bool all_signal_triggered = false;
    int retries_used = 0;
    int shifts_used = 0;
    bool degenerate = false;
    // final search window (after any clamping and shifting)
    int n_s = 0;
    int n_e = 0;
    int n_f = 0;
};

// Full two-step pipeline: block energies -> coarse block -> correlation
// window [k_b*B - M1, (k_b+1)*B - 1 + M2] -> change detection -> guard tests.
// A noise-only verdict reruns the whole pipeline with fresh observations
// (up to max_retries); an all-signal verdict shifts the window back one
// block and redoes the fine step (up to max_shifts). Budget exhaustion
// returns the best available estimate with the trigger flags set.
ToaEstimate estimate_toa(const SystemConfig& cfg, const ChannelRealization& ch,
                         RandomStream& rng);

} // namespace toalab
