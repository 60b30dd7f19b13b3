#pragma once

#include <cmath>
#include <utility>

namespace toalab {

// Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
// Subdivision is forced down to min_depth before the error estimate may
// terminate a panel, so narrow interior features the first probe points miss
// (e.g. a sharp mode far from the endpoints) still get resolved.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double tol, int max_depth = 40,
                          int min_depth = 7) {
    struct Impl {
        const F& f;
        int max_depth;
        int min_depth;
        double recurse(double a, double fa, double b, double fb, double m, double fm,
                       double whole, double tol, int depth) const {
            const double lm = 0.5 * (a + m);
            const double rm = 0.5 * (m + b);
            const double flm = f(lm);
            const double frm = f(rm);
            const double h = b - a;
            const double left = h / 12.0 * (fa + 4.0 * flm + fm);
            const double right = h / 12.0 * (fm + 4.0 * frm + fb);
            const double delta = left + right - whole;
            if (depth >= max_depth ||
                (depth >= min_depth && std::abs(delta) <= 15.0 * tol)) {
                return left + right + delta / 15.0;
            }
            return recurse(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1) +
                   recurse(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1);
        }
    };
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Impl{f, max_depth, min_depth}.recurse(a, fa, b, fb, m, fm, whole, tol, 0);
}

} // namespace toalab
