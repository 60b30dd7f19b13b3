#include "toalab/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace toalab {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

// Lanczos g = 7, 9 coefficients.
constexpr double kLanczos[9] = {
    0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
    771.32342877765313,     -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7,
};

double log_gamma_lanczos(double x) {
    // valid for x > 0; used below the Stirling cutover
    double acc = kLanczos[0];
    for (int k = 1; k < 9; ++k) {
        acc += kLanczos[k] / (x - 1.0 + k);
    }
    const double t = x + 6.5;
    return kLogSqrt2Pi + (x - 0.5) * std::log(t) - t + std::log(acc);
}

double log_gamma_stirling(double x) {
    // Stirling series; truncation error below 1e-15 relative for x >= 12
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series = inv * (1.0 / 12.0 +
                          inv2 * (-1.0 / 360.0 +
                          inv2 * (1.0 / 1260.0 +
                          inv2 * (-1.0 / 1680.0 +
                          inv2 * (1.0 / 1188.0 +
                          inv2 * (-691.0 / 360360.0))))));
    return (x - 0.5) * std::log(x) - x + kLogSqrt2Pi + series;
}

// Direct Kummer series with positive terms; rescales to stay finite.
double log_kummer_series(double a, double b, double x) {
    constexpr double kRescaleAt = 0x1.0p+512;
    constexpr double kLogRescale = 512.0 * std::numbers::ln2;
    double sum = 1.0;
    double term = 1.0;
    double log_scale = 0.0;
    for (int k = 0; k < 200000; ++k) {
        term *= (a + k) * x / ((b + k) * (k + 1));
        sum += term;
        if (term < sum * 1e-17 && k > 2) break;
        if (sum > kRescaleAt) {
            sum *= 0x1.0p-512;
            term *= 0x1.0p-512;
            log_scale += kLogRescale;
        }
    }
    return log_scale + std::log(sum);
}

// Large-x expansion Phi(a,b;x) ~ G(b)/G(a) e^x x^(a-b) sum_n (b-a)_n (1-a)_n / (n! x^n),
// summed adaptively up to the smallest term. Used past x > max(30, 2a^2),
// where the truncation floor is far below double precision.
double log_kummer_asymptotic(double a, double b, double x) {
    double sum = 1.0;
    double term = 1.0;
    double prev_mag = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 500; ++n) {
        term *= (b - a + n) * (1.0 - a + n) / ((n + 1) * x);
        const double mag = std::abs(term);
        if (mag > prev_mag) break; // divergence onset
        sum += term;
        prev_mag = mag;
        if (mag < 1e-18 * std::abs(sum)) break;
    }
    return x + (a - b) * std::log(x) + log_gamma(b) - log_gamma(a) + std::log(sum);
}

} // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
    return x < 12.0 ? log_gamma_lanczos(x) : log_gamma_stirling(x);
}

double log_kummer(double a, double b, double x) {
    if (!(b > 0.0)) throw std::domain_error("log_kummer: requires b > 0");
    if (std::isnan(a) || std::isnan(x)) throw std::domain_error("log_kummer: nan argument");
    if (x < 0.0) {
        // Kummer transformation; the transformed series has positive terms
        return x + log_kummer(b - a, b, -x);
    }
    if (x == 0.0 || a == 0.0) return 0.0;
    if (a < 0.0) {
        // Phi(a,b;x) has zeros for a < 0, the log is not defined in general
        throw std::domain_error("log_kummer: a < 0 with x > 0 is not supported");
    }
    if (a == b) return x; // Phi(a,a;x) = e^x
    const double split = std::max(30.0, 2.0 * a * a);
    return x <= split ? log_kummer_series(a, b, x) : log_kummer_asymptotic(a, b, x);
}

double nakagami_moment(int n, const NakagamiParams& params) {
    if (n < 0) throw std::domain_error("nakagami_moment: requires n >= 0");
    if (!params.valid()) throw std::domain_error("nakagami_moment: invalid parameters");
    if (n == 0) return 1.0;
    const double half_n = 0.5 * n;
    return std::exp(log_gamma(params.m + half_n) - log_gamma(params.m) +
                    half_n * std::log(params.omega / params.m));
}

double sample_gamma(double shape, double scale, RandomStream& rng) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw std::domain_error("sample_gamma: requires shape > 0 and scale > 0");
    }
    if (shape < 1.0) {
        const double u = rng.uniform_open();
        return sample_gamma(shape + 1.0, scale, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
        const double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
}

double sample_nakagami(const NakagamiParams& params, RandomStream& rng) {
    if (!params.valid()) throw std::domain_error("sample_nakagami: invalid parameters");
    return std::sqrt(sample_gamma(params.m, params.omega / params.m, rng));
}

} // namespace toalab
