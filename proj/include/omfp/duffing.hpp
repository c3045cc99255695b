#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "omfp/equilibria.hpp"
#include "omfp/model.hpp"
#include "omfp/special.hpp"
#include "omfp/spectrum_series.hpp"

// Dissipationless displacement spectra of a thermally populated anharmonic
// well V(x) = mu x^2 + nu x^4: the energy-dependent orbit frequency disperses
// the line, and the Fourier coefficients of the closed orbits set the
// harmonic weights. The optomechanical mapping lands in u = x/x_zpf
// coordinates, where the kinetic term (w^2/4) corresponds to an effective
// mass of 1/2, so the mass is kept explicit here.

namespace omfp {

struct AnharmonicPotential {
    double mu = 0.0;          ///< quadratic coefficient (>= 0; double wells out of scope)
    double nu = 0.0;          ///< quartic coefficient (>= 0, > 0 for spectra)
    double mass = 1.0;
    double temperature = 1.0; ///< k_B T_eff in the same energy units as V
    double offset = 0.0;      ///< constant added to V; cancels out of every spectrum
};

inline void validate(const AnharmonicPotential& pot) {
    if (!(pot.mu >= 0.0) || !(pot.nu >= 0.0))
        throw std::invalid_argument("AnharmonicPotential: need mu >= 0 and nu >= 0");
    if (pot.mu == 0.0 && pot.nu == 0.0)
        throw std::invalid_argument("AnharmonicPotential: mu and nu cannot both vanish");
    if (!(pot.mass > 0.0)) throw std::invalid_argument("AnharmonicPotential: mass must be > 0");
    if (!(pot.temperature > 0.0))
        throw std::invalid_argument("AnharmonicPotential: temperature must be > 0");
}

inline double potential_value(double x, const AnharmonicPotential& pot) {
    return pot.mu * x * x + pot.nu * x * x * x * x + pot.offset;
}

/// Turning point of the orbit with energy E, x_max^2 = 2E/(mu + sqrt(mu^2+4Enu)).
inline double turning_point(double energy, const AnharmonicPotential& pot) {
    const double s = std::sqrt(pot.mu * pot.mu + 4.0 * energy * pot.nu);
    return std::sqrt(2.0 * energy / (pot.mu + s));
}

/// Elliptic parameter of the orbit, m(E) = (C-1)/(C+1) in a cancellation-free
/// form; also equals the reduced quartic weight nu*x_max^4/E.
inline double orbit_elliptic_parameter(double energy, const AnharmonicPotential& pot) {
    const double s = std::sqrt(pot.mu * pot.mu + 4.0 * energy * pot.nu);
    return (s - pot.mu) / (s + pot.mu);
}

/// Energy-dependent oscillation frequency omega(E) = 2 pi / T(E). The single
/// expression (pi/2) sqrt((mu+S)/mass)/K(-m) with S = sqrt(mu^2+4Enu) covers
/// the harmonic (nu=0) and purely quartic (mu=0) limits without overflow.
inline double oscillation_frequency(double energy, const AnharmonicPotential& pot) {
    if (!(energy > 0.0))
        throw std::domain_error("oscillation_frequency: energy must be > 0");
    const double s = std::sqrt(pot.mu * pot.mu + 4.0 * energy * pot.nu);
    if (s == 0.0) throw std::domain_error("oscillation_frequency: flat potential");
    const double ell = (s - pot.mu) / (s + pot.mu);
    return 0.5 * pi * std::sqrt((pot.mu + s) / pot.mass) / complete_elliptic_k(-ell);
}

/// d omega/dE neglecting the E-dependence of K (the form used in the
/// spectrum); exact in the purely quartic limit.
inline double omega_derivative(double energy, const AnharmonicPotential& pot) {
    if (!(energy > 0.0)) throw std::domain_error("omega_derivative: energy must be > 0");
    if (pot.nu == 0.0) return 0.0;
    const double s = std::sqrt(pot.mu * pot.mu + 4.0 * energy * pot.nu);
    const double ell = (s - pot.mu) / (s + pot.mu);
    return 0.5 * pi * pot.nu / (s * std::sqrt(pot.mass * (pot.mu + s))) /
           complete_elliptic_k(-ell);
}

/// Exact numerical d omega/dE (central difference); diagnostic companion to
/// omega_derivative.
inline double omega_derivative_exact(double energy, const AnharmonicPotential& pot) {
    const double h = 1e-5 * energy;
    return (oscillation_frequency(energy + h, pot) - oscillation_frequency(energy - h, pot)) /
           (2.0 * h);
}

namespace detail {

/// Dense table of the orbit phase integral h(theta) = \int_{-pi/2}^theta
/// dtheta'/sqrt(1 + m sin^2 theta'), theta in [-pi/2, pi/2], built by a
/// fourth-order cumulative rule. Shared by all harmonics of one orbit.
struct OrbitPhaseTable {
    std::vector<double> theta;
    std::vector<double> kernel; ///< 1/sqrt(1 + m sin^2 theta)
    std::vector<double> phase;  ///< h(theta), phase.back() = half-period integral

    explicit OrbitPhaseTable(double ell_param, std::size_t n_intervals = 4096) {
        const std::size_t n = n_intervals + (n_intervals % 2); // even
        theta.resize(n + 1);
        kernel.resize(n + 1);
        phase.resize(n + 1);
        const double dth = pi / double(n);
        for (std::size_t k = 0; k <= n; ++k) {
            theta[k] = -0.5 * pi + dth * double(k);
            const double st = std::sin(theta[k]);
            kernel[k] = 1.0 / std::sqrt(1.0 + ell_param * st * st);
        }
        phase[0] = 0.0;
        for (std::size_t k = 0; k + 2 <= n; k += 2) {
            // Simpson for the even point, three-point open rule for the odd
            phase[k + 1] = phase[k] + dth / 12.0 * (5.0 * kernel[k] + 8.0 * kernel[k + 1] - kernel[k + 2]);
            phase[k + 2] = phase[k] + dth / 3.0 * (kernel[k] + 4.0 * kernel[k + 1] + kernel[k + 2]);
        }
    }
};

} // namespace detail

/// Fourier coefficients x_n(E) of the closed orbit (cosine series, orbit
/// started at the left turning point, so x_1 < 0). Even harmonics vanish by
/// symmetry and are returned as exact zeros. Index k of the result holds the
/// coefficient of harmonic n = k+1.
inline std::vector<double> orbit_fourier_coefficients(double energy,
                                                      const AnharmonicPotential& pot,
                                                      int max_harmonic = 7) {
    if (!(energy > 0.0))
        throw std::domain_error("orbit_fourier_coefficients: energy must be > 0");
    if (max_harmonic < 1)
        throw std::invalid_argument("orbit_fourier_coefficients: max_harmonic must be >= 1");
    const double x_max = turning_point(energy, pot);
    const double ell = orbit_elliptic_parameter(energy, pot);
    const detail::OrbitPhaseTable tab(ell);
    const double h_end = tab.phase.back();
    const std::size_t n_pts = tab.theta.size();
    const double dth = pi / double(n_pts - 1);

    std::vector<double> coeffs(max_harmonic, 0.0);
    for (int n = 1; n <= max_harmonic; n += 2) {
        // composite Simpson over the tabulated integrand
        double acc = 0.0;
        auto f = [&](std::size_t k) {
            return std::sin(tab.theta[k]) * tab.kernel[k] *
                   std::cos(n * pi * tab.phase[k] / h_end);
        };
        for (std::size_t k = 0; k + 2 < n_pts; k += 2)
            acc += dth / 3.0 * (f(k) + 4.0 * f(k + 1) + f(k + 2));
        coeffs[n - 1] = x_max / h_end * acc;
    }
    return coeffs;
}

/// Normalized quartic-orbit harmonic constants zeta_n = x_n/x_max at mu = 0;
/// independent of E there.
inline double quartic_harmonic_constant(int n) {
    AnharmonicPotential pot{0.0, 1.0, 1.0, 1.0};
    const auto c = orbit_fourier_coefficients(1.0, pot, n);
    return c[n - 1];
}

/// Gibbs normalization 1/Z of exp(-(p^2/2m + V)/T) over the full phase plane.
inline double gibbs_normalization(const AnharmonicPotential& pot) {
    validate(pot);
    const double t = pot.temperature;
    // position partition function by composite Simpson out to V = 45 T
    const double vmax = 45.0 * t;
    const double s = std::sqrt(pot.mu * pot.mu + 4.0 * vmax * pot.nu);
    const double x_cut = std::sqrt(2.0 * vmax / (pot.mu + s));
    const std::size_t n = 4000;
    const double dx = x_cut / double(n);
    double zx = 0.0;
    auto f = [&](std::size_t k) { return std::exp(-potential_value(dx * double(k), pot) / t); };
    for (std::size_t k = 0; k + 2 <= n; k += 2)
        zx += dx / 3.0 * (f(k) + 4.0 * f(k + 1) + f(k + 2));
    zx *= 2.0;
    const double zp = std::sqrt(2.0 * pi * pot.mass * t);
    return 1.0 / (zx * zp);
}

/// Dissipationless displacement spectrum: sum over odd harmonics n of the
/// orbit with n omega(E_n) = Omega, Boltzmann-weighted and divided by the
/// frequency dispersion |d omega/dE|. Harmonics with no solution at a given
/// Omega (below the harmonic floor when mu > 0) are skipped.
///
/// The default Jacobian is the K-frozen form of omega_derivative, exact in
/// the purely quartic limit but 2/3 of the true slope for weak quartic
/// perturbations of a harmonic well; set exact_jacobian for the numerical
/// derivative instead.
inline SpectrumSeries dissipationless_spectrum(const AnharmonicPotential& pot,
                                               const std::vector<double>& omegas,
                                               int max_harmonic = 7,
                                               bool exact_jacobian = false) {
    validate(pot);
    if (!(pot.nu > 0.0))
        throw PreconditionError("dissipationless_spectrum: needs nu > 0 (no dispersion otherwise)");
    const double norm = gibbs_normalization(pot);
    const double t = pot.temperature;
    const double omega_floor = pot.mu > 0.0 ? std::sqrt(2.0 * pot.mu / pot.mass) : 0.0;

    SpectrumSeries out;
    out.omegas = omegas;
    out.values.assign(omegas.size(), 0.0);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double omega = omegas[i];
        double total = 0.0;
        for (int n = 1; n <= max_harmonic; n += 2) {
            const double target = omega / double(n);
            if (!(target > omega_floor)) continue;
            double energy;
            if (pot.mu == 0.0) {
                // omega(E) = (pi/2) sqrt(2/m) (E nu)^{1/4} / K(-1)
                const double c = 0.5 * pi * std::sqrt(2.0 / pot.mass) / elliptic_k_minus1();
                energy = std::pow(target / c, 4.0) / pot.nu;
            } else {
                double lo = 1e-12 * t;
                while (oscillation_frequency(lo, pot) >= target && lo > 1e-280) lo *= 0.25;
                double hi = t;
                while (oscillation_frequency(hi, pot) < target && hi < 1e250) hi *= 2.0;
                energy = detail::brent_root(
                    [&](double e) { return oscillation_frequency(e, pot) - target; }, lo, hi);
            }
            if ((energy + pot.offset) / t > 700.0) continue; // Boltzmann weight underflows
            const double domega = exact_jacobian ? omega_derivative_exact(energy, pot)
                                                 : omega_derivative(energy, pot);
            if (!(domega > 0.0)) continue;
            const auto coeffs = orbit_fourier_coefficients(energy, pot, n);
            const double xn = coeffs[n - 1];
            total += norm * (2.0 * pi) * (2.0 * pi) * std::exp(-(energy + pot.offset) / t) /
                     (double(n) * oscillation_frequency(energy, pot) * domega) * xn * xn;
        }
        out.values[i] = total;
    }
    out.validate();
    return out;
}

namespace detail {

/// Difference of the two solutions of x e^{1-x} = 1/2 (half-width constant of
/// the weak-anharmonic line shape).
inline double exp_linear_halfwidth() {
    static const double value = [] {
        auto f = [](double x) { return x * std::exp(1.0 - x) - 0.5; };
        const double lo = brent_root(f, 1e-12, 1.0);
        const double hi = brent_root(f, 1.0, 20.0);
        return hi - lo;
    }();
    return value;
}

/// Same for x^4 e^{1-x^4} = 1/2 (purely quartic line shape).
inline double exp_quartic_halfwidth() {
    static const double value = [] {
        auto f = [](double x) { return std::pow(x, 4.0) * std::exp(1.0 - std::pow(x, 4.0)) - 0.5; };
        const double lo = brent_root(f, 1e-3, 1.0);
        const double hi = brent_root(f, 1.0, 3.0);
        return hi - lo;
    }();
    return value;
}

} // namespace detail

/// Map the tuning-line quartic expansion onto the anharmonic-potential
/// machinery in u coordinates (effective mass 1/2).
inline AnharmonicPotential anharmonic_from_model(const ModelParams& p, double temperature) {
    AnharmonicPotential pot;
    pot.mu = quadratic_coefficient_u(p);
    if (std::fabs(pot.mu) < 1e-10) pot.mu = 0.0; // rounding residue at the quartic point
    pot.nu = quartic_coefficient_u(p);
    pot.mass = 0.5;
    pot.temperature = temperature;
    return pot;
}

/// Effective temperature at the central tuning-line equilibrium Delta'_*.
inline double tuning_line_temperature(const ModelParams& p) {
    const double u_star = (p.delta_prime_star - p.delta) / p.g0;
    return effective_temperature(p, u_star);
}

struct WeakAnharmonicShape {
    double omega_bar;   ///< renormalized frequency, spectrum support starts here
    double xi;          ///< anharmonic frequency-per-energy slope
    double temperature; ///< k_B T_eff
    double peak() const { return omega_bar + xi * temperature; }
    double width() const { return detail::exp_linear_halfwidth() * xi * temperature; }
};

inline WeakAnharmonicShape weak_anharmonic_shape(const ModelParams& p) {
    const double expected = tuning_line_detuning(p.n_max, p);
    if (std::fabs(p.delta - expected) > 1e-6 * p.kappa)
        throw PreconditionError("weak_anharmonic_shape: parameters not on the tuning line");
    const double nt = p.n_max / p.n_max_star;
    if (!(nt < 1.0))
        throw PreconditionError("weak_anharmonic_shape: requires n_max < n_max_star");
    WeakAnharmonicShape s;
    s.omega_bar = std::sqrt(1.0 - nt);
    s.xi = 9.0 * sqrt3 / 8.0 * p.n_max * p.lambda * p.lambda /
           (s.omega_bar * s.omega_bar * s.omega_bar * p.kappa);
    s.temperature = tuning_line_temperature(p);
    return s;
}

/// Fraction <nu u^4>/<mu u^2> of the harmonic Gibbs state; the closed-form
/// line shape assumes this is small.
inline double weak_anharmonicity_ratio(const ModelParams& p) {
    const double mu = quadratic_coefficient_u(p);
    const double nu = quartic_coefficient_u(p);
    const double t = tuning_line_temperature(p);
    return 3.0 * nu * t / (2.0 * mu * mu);
}

/// Closed-form weakly anharmonic displacement spectrum (exponential-times-
/// linear shape above the renormalized frequency), in x_zpf^2/Omega_m units.
inline SpectrumSeries weak_anharmonic_spectrum(const ModelParams& p,
                                               const std::vector<double>& omegas,
                                               std::string* warning = nullptr) {
    const WeakAnharmonicShape s = weak_anharmonic_shape(p);
    if (warning) {
        const double ratio = weak_anharmonicity_ratio(p);
        if (ratio > 0.1)
            *warning = "weak-anharmonicity premise fails: <nu x^4>/<mu x^2> = " +
                       std::to_string(ratio);
    }
    SpectrumSeries out;
    out.omegas = omegas;
    out.values.assign(omegas.size(), 0.0);
    const double scale = 2.0 * pi / (s.temperature * s.xi * s.xi * s.omega_bar);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double w = omegas[i];
        if (w <= s.omega_bar) continue;
        out.values[i] = scale * (w - s.omega_bar) / w *
                        std::exp(-(w - s.omega_bar) / (s.xi * s.temperature));
    }
    out.validate();
    return out;
}

struct QuarticShape {
    double xi_const;    ///< overall amplitude constant
    double eta;         ///< exponent scale; peak at eta^{-1/4}
    double temperature;
    double peak() const { return std::pow(eta, -0.25); }
    double width() const { return detail::exp_quartic_halfwidth() * peak(); }
};

inline QuarticShape quartic_shape(const ModelParams& p) {
    const auto qp = quartic_point(p.lambda, p.kappa);
    if (std::fabs(p.n_max - qp.n_max_star) > 1e-6 * qp.n_max_star ||
        std::fabs(p.delta - qp.delta_star) > 1e-6 * std::fabs(qp.delta_star))
        throw PreconditionError("quartic_shape: parameters must sit at the quartic point");
    QuarticShape s;
    s.temperature = tuning_line_temperature(p);
    const double k1 = elliptic_k_minus1();
    const double zeta1 = quartic_harmonic_constant(1);
    // amplitude constant of the first-harmonic closed form, fixed by the
    // normalization of the general harmonic sum
    s.xi_const = 8.0 * std::pow(16.0 / 3.0, 1.75) / std::pow(pi, 4.5) *
                 std::pow(k1, 6.0) / gamma_fn(1.25) * zeta1 * zeta1;
    s.eta = 16.0 / (3.0 * std::pow(pi, 4.0)) * std::pow(k1, 4.0) / p.lambda *
            p.kappa / s.temperature;
    return s;
}

/// Closed-form purely quartic displacement spectrum (first harmonic), in
/// x_zpf^2/Omega_m units. Requires the quartic-point parameters.
inline SpectrumSeries quartic_spectrum(const ModelParams& p, const std::vector<double>& omegas) {
    const QuarticShape s = quartic_shape(p);
    SpectrumSeries out;
    out.omegas = omegas;
    out.values.assign(omegas.size(), 0.0);
    const double amp = s.xi_const * std::pow(p.kappa / p.lambda, 1.75) *
                       std::pow(s.temperature, -0.75);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double w4 = std::pow(omegas[i], 4.0);
        out.values[i] = amp * w4 * std::exp(-s.eta * w4);
    }
    out.validate();
    return out;
}

/// Smallness parameter of the quartic-well truncation (the closed-form
/// spectra assume this is well below 1); reported, not judged.
inline double validity_ratio(const ModelParams& p) {
    const double t_over_kappa = 1.0 / (2.0 * sqrt3); // k_B T_eff/(hbar kappa) at the quartic point
    return std::sqrt(t_over_kappa * gamma_fn(0.75) / gamma_fn(1.25)) *
           std::pow(p.lambda * t_over_kappa, 0.25);
}

} // namespace omfp
