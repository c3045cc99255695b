#pragma once

#include <cmath>
#include <stdexcept>

#include "omfp/errors.hpp"

namespace omfp {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double sqrt3 = 1.7320508075688772935;

/// coth(x) for x > 0, stable against overflow for large x and against
/// cancellation for small x (coth(x) = 1 + 2/(e^{2x}-1)).
inline double coth(double x) {
    if (!(x > 0.0))
        throw std::domain_error("coth: argument must be positive");
    if (x > 360.0)
        return 1.0; // e^{2x} overflows; coth is 1 to machine precision
    return 1.0 + 2.0 / std::expm1(2.0 * x);
}

/// Complete elliptic integral of the first kind in the *parameter*
/// convention, K(m) = \int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt, computed by
/// the arithmetic-geometric mean. Valid for m < 1, in particular for the
/// negative parameters appearing in the quartic-oscillator period.
inline double complete_elliptic_k(double m) {
    if (!(m < 1.0))
        throw std::domain_error("complete_elliptic_k: parameter must be < 1");
    double a = 1.0;
    double b = std::sqrt(1.0 - m);
    // quadratic convergence; the cap guards the last-ulp stall
    for (int it = 0; it < 40 && std::fabs(a - b) > 1e-16 * (a + b); ++it) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return pi / (2.0 * a);
}

/// K(-1): period constant of the pure quartic well.
inline double elliptic_k_minus1() {
    static const double value = complete_elliptic_k(-1.0);
    return value;
}

/// Gamma function. std::tgamma on this platform is a Lanczos-class
/// implementation good to ~1e-15 relative; validated in the test suite
/// against Gamma(1/2) = sqrt(pi).
inline double gamma_fn(double x) { return std::tgamma(x); }

namespace detail {

/// Solve f(x) = 0 by bisection refined with secant steps; f must change sign
/// on [lo, hi].
template <typename F>
double brent_root(F&& f, double lo, double hi, double rel_tol = 1e-14, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw SolveError("brent_root: endpoints do not bracket a root");
    for (int it = 0; it < max_iter; ++it) {
        double mid = 0.5 * (lo + hi);
        // secant candidate, accepted only if it stays inside the bracket
        double sec = lo - flo * (hi - lo) / (fhi - flo);
        double x = (sec > lo && sec < hi) ? sec : mid;
        double fx = f(x);
        if (fx == 0.0 || (hi - lo) < rel_tol * (std::fabs(x) + rel_tol)) return x;
        if ((fx > 0) == (flo > 0)) {
            lo = x; flo = fx;
        } else {
            hi = x; fhi = fx;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

} // namespace omfp
