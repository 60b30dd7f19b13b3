#pragma once

#include "toalab/random.hpp"

namespace toalab {

// Nakagami-m amplitude distribution parameters.
struct NakagamiParams {
    double m;     // shape, >= 0.5
    double omega; // mean-square power, > 0

    bool valid() const { return m >= 0.5 && omega > 0.0; }
};

// ln Gamma(x) for x > 0. Lanczos below 12, Stirling series above.
// Relative error <= 1e-12 on [0.5, 200]. Throws std::domain_error for x <= 0.
double log_gamma(double x);

// ln Phi(a, b; x) where Phi is the confluent hypergeometric (Kummer) function
//   Phi(a, b; x) = sum_k (a)_k / (b)_k * x^k / k!.
// Evaluated in the log domain so large x (up to 1e5 and beyond) cannot
// overflow. Primary domain is a > 0, b > 0, x >= 0: direct series for
// moderate x, large-x expansion past max(30, 2a^2). Negative x is routed
// through the Kummer transformation Phi(a,b;x) = e^x Phi(b-a,b;-x).
// Throws std::domain_error for b <= 0, and for a < 0 with x > 0 (where
// Phi can be nonpositive and the log is undefined).
double log_kummer(double a, double b, double x);

// n-th raw moment of a Nakagami-m variable:
//   E{X^n} = Gamma(m + n/2) / Gamma(m) * (omega/m)^(n/2).
double nakagami_moment(int n, const NakagamiParams& params);

// Gamma(shape, scale) sampler, Marsaglia-Tsang rejection for shape >= 1 and
// the power-of-uniform boost for shape < 1. The draw sequence does not depend
// on scale, so samples from a common seed scale exactly.
double sample_gamma(double shape, double scale, RandomStream& rng);

// Nakagami-m amplitude draw: sqrt of Gamma(m, omega/m), so E{X^2} = omega.
double sample_nakagami(const NakagamiParams& params, RandomStream& rng);

} // namespace toalab
