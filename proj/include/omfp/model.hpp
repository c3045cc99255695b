#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "omfp/errors.hpp"
#include "omfp/special.hpp"

// Dimensionless convention used throughout: hbar = m = Omega_m = 1.
// Displacement u = x/x_zpf, momentum w = p/(m Omega_m x_zpf); all rates and
// detunings are in units Omega_m, energies in hbar*Omega_m, temperatures in
// hbar*Omega_m/k_B. The bare oscillator energy is (u^2 + w^2)/4 and the pair
// (u, w) evolves as du/dt = w, dw/dt = -2 dV/du (the factor 2 comes from the
// Poisson bracket {u, w} = 2 of the zero-point-scaled variables).

namespace omfp {

struct ModelParams {
    double kappa = 100.0;   ///< cavity decay rate
    double gamma_m = 0.0;   ///< intrinsic mechanical damping
    double lambda = 0.01;   ///< single-photon parametric cooperativity 2 g0^2/kappa
    double n_max = 0.0;     ///< resonant intracavity photon number
    double delta = 0.0;     ///< laser detuning (Omega_m units)
    double bath_temperature = 10.0;      ///< k_B T_b / (hbar Omega_m)
    double photon_bath_occupation = 0.0; ///< thermal photon occupation, kept at 0

    // derived, filled by make_model()
    double g0 = 0.0;        ///< single-photon coupling sqrt(lambda*kappa/2)
    double g0_sq = 0.0;
    double drive = 0.0;     ///< drive amplitude eps = kappa*sqrt(n_max)/2
    double n_max_star = 0.0;        ///< photon number of the purely quartic well
    double delta_star = 0.0;        ///< detuning of the purely quartic well
    double delta_prime_star = 0.0;  ///< effective detuning -kappa/(2 sqrt(3))

    std::vector<std::string> warnings;
};

/// Validate the physical fields and fill the derived ones. All other
/// functions assume their ModelParams went through here.
inline ModelParams make_model(ModelParams p) {
    if (!(p.kappa > 0.0)) throw std::invalid_argument("make_model: kappa must be > 0");
    if (!(p.gamma_m >= 0.0)) throw std::invalid_argument("make_model: gamma_m must be >= 0");
    if (!(p.lambda >= 0.0)) throw std::invalid_argument("make_model: lambda must be >= 0");
    if (!(p.n_max >= 0.0)) throw std::invalid_argument("make_model: n_max must be >= 0");
    if (!(p.bath_temperature >= 0.0))
        throw std::invalid_argument("make_model: bath temperature must be >= 0");
    if (!(p.photon_bath_occupation >= 0.0))
        throw std::invalid_argument("make_model: photon bath occupation must be >= 0");
    p.warnings.clear();
    if (p.kappa < 10.0)
        p.warnings.push_back("kappa < 10 Omega_m: outside the intended unresolved-sideband regime");
    p.g0_sq = p.lambda * p.kappa / 2.0;
    p.g0 = std::sqrt(p.g0_sq);
    p.drive = p.kappa * std::sqrt(p.n_max) / 2.0;
    p.n_max_star = p.lambda > 0.0 ? 4.0 / (3.0 * sqrt3 * p.lambda)
                                  : std::numeric_limits<double>::infinity();
    p.delta_star = -sqrt3 * p.kappa / 2.0;
    p.delta_prime_star = -p.kappa / (2.0 * sqrt3);
    return p;
}

/// Convert a detuning given in kappa units to the internal Omega_m units.
inline double delta_from_kappa_units(double delta_over_kappa, double kappa) {
    return delta_over_kappa * kappa;
}

/// Effective detuning Delta'(u) = Delta + g0*u seen by the cavity when the
/// oscillator sits at u.
inline double effective_detuning(double u, const ModelParams& p) {
    return p.delta + p.g0 * u;
}

/// Mean intracavity photon number at displacement u (Lorentzian in Delta').
inline double photon_number(double u, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    const double hw2 = p.kappa * p.kappa / 4.0;
    return p.n_max * hw2 / (dp * dp + hw2);
}

/// Effective potential V_eff(u) in hbar*Omega_m; bare part u^2/4 plus the
/// radiation-pressure arctangent well. Defined up to a constant offset.
inline double effective_potential(double u, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    return 0.25 * u * u - 0.5 * p.n_max * p.kappa * std::atan(2.0 * dp / p.kappa);
}

/// Static force F(u) = -dV_eff/du = -u/2 + g0 n(u).
inline double static_force(double u, const ModelParams& p) {
    return -0.5 * u + p.g0 * photon_number(u, p);
}

/// Drift force entering dw/dt; twice the gradient force because of the
/// {u, w} = 2 bracket.
inline double momentum_drift(double u, const ModelParams& p) {
    return 2.0 * static_force(u, p);
}

/// Curvature d^2 V_eff/du^2; positive at stable minima.
inline double potential_curvature(double u, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    const double den = dp * dp + p.kappa * p.kappa / 4.0;
    return 0.5 + 2.0 * p.g0_sq * dp * photon_number(u, p) / den;
}

/// Cavity-induced damping rate; negative on the heating side Delta' > 0.
inline double optical_damping(double u, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    const double den = dp * dp + p.kappa * p.kappa / 4.0;
    return -4.0 * p.g0_sq * dp * p.kappa * photon_number(u, p) / (den * den);
}

inline double total_damping(double u, const ModelParams& p) {
    return p.gamma_m + optical_damping(u, p);
}

/// Momentum diffusion coefficient from photon shot noise, in the
/// flat-spectrum approximation (frequency dropped in the cavity kernel).
inline double optical_diffusion(double u, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    const double den = dp * dp + p.kappa * p.kappa / 4.0;
    return 4.0 * p.g0_sq * p.kappa * photon_number(u, p) / den;
}

/// Frequency-resolved force-noise kernel behind optical_diffusion;
/// diagnostic only, never enters the Fokker-Planck generator.
inline double optical_force_spectrum(double u, double omega, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    const double shifted = omega + dp;
    return 4.0 * p.g0_sq * p.kappa * photon_number(u, p) /
           (shifted * shifted + p.kappa * p.kappa / 4.0);
}

/// Thermal Brownian momentum diffusion 2 Gamma_m coth(1/(2 T_b)); the
/// coth factor is 1 at T_b = 0 (zero-point limit).
inline double thermal_diffusion(const ModelParams& p) {
    if (p.gamma_m == 0.0) return 0.0;
    const double cf = p.bath_temperature > 0.0 ? coth(0.5 / p.bath_temperature) : 1.0;
    return 2.0 * p.gamma_m * cf;
}

inline double total_diffusion(double u, const ModelParams& p) {
    return thermal_diffusion(p) + optical_diffusion(u, p);
}

/// Oscillator energy (u^2-convention) in hbar*Omega_m.
inline double phase_space_energy(double u, double w, const ModelParams& p) {
    return 0.25 * w * w + effective_potential(u, p);
}

/// Effective temperature from the fluctuation-dissipation ratio,
/// coth(1/(2 T_eff)) = D_tot / (2 Gamma_tot). Solved exactly; reduces to the
/// optics-only expression when the thermal terms vanish, and to T_b when the
/// optical terms vanish.
inline double effective_temperature_from_rates(double diffusion, double damping) {
    if (!(damping > 0.0))
        throw NegativeDampingError(
            "effective temperature undefined: total damping <= 0 (dynamically unstable)");
    const double r = diffusion / (2.0 * damping);
    if (!(r > 1.0))
        throw NegativeDampingError("effective temperature undefined: FDT ratio <= 1");
    // coth(1/(2T)) = r  =>  T = 1/log((r+1)/(r-1))
    return 1.0 / std::log1p(2.0 / (r - 1.0));
}

inline double effective_temperature(const ModelParams& p, double u_e) {
    return effective_temperature_from_rates(total_diffusion(u_e, p), total_damping(u_e, p));
}

/// Damping/diffusion model of the kinetic solvers. The frozen variant
/// evaluates Gamma_tot and D_tot once at the tracked equilibrium (the slaved
/// cavity kernels of the adiabatic elimination); the full variant keeps their
/// position dependence. The frozen variant is the default: it reproduces the
/// Gibbs stationary states at the figure parameter sets, where the wide
/// quartic well otherwise samples the diverging local FDT temperature near
/// cavity resonance.
enum class RateModel { frozen_at_equilibrium, position_dependent };

/// Detuning on the special tuning line that keeps the central equilibrium at
/// the steepest point of the Lorentzian.
inline double tuning_line_detuning(double n_max, double kappa, double lambda) {
    return -kappa / (2.0 * sqrt3) - 0.75 * kappa * lambda * n_max;
}

inline double tuning_line_detuning(double n_max, const ModelParams& p) {
    return tuning_line_detuning(n_max, p.kappa, p.lambda);
}

struct QuarticExpansion {
    double offset;     ///< V_eff at the expansion point, hbar*Omega_m
    double quadratic;  ///< B coefficient of (Delta'-Delta'_*)^2, units 1/kappa
    double quartic;    ///< C coefficient of (Delta'-Delta'_*)^4, units 1/kappa^3
};

/// Expansion of V_eff about Delta' = Delta'_* on the tuning line; there is no
/// cubic term there by construction. Errors off the tuning line, where the
/// expansion makes no claim.
inline QuarticExpansion quartic_expansion(const ModelParams& p) {
    const double expected = tuning_line_detuning(p.n_max, p);
    if (std::fabs(p.delta - expected) > 1e-9 * p.kappa)
        throw PreconditionError("quartic_expansion: (n_max, delta) not on the tuning line");
    const double u_star = (p.delta_prime_star - p.delta) / p.g0;
    QuarticExpansion q;
    q.offset = effective_potential(u_star, p);
    q.quadratic = (1.0 / p.lambda - 3.0 * sqrt3 / 4.0 * p.n_max) / (2.0 * p.kappa);
    q.quartic = 9.0 * sqrt3 / 16.0 * p.n_max / (p.kappa * p.kappa * p.kappa);
    return q;
}

/// Quartic-well coefficient in u-coordinates, nu_u = C g0^4 (per u^4).
inline double quartic_coefficient_u(const ModelParams& p) {
    return quartic_expansion(p).quartic * p.g0_sq * p.g0_sq;
}

/// Quadratic coefficient in u-coordinates, mu_u = B g0^2 (per u^2).
inline double quadratic_coefficient_u(const ModelParams& p) {
    return quartic_expansion(p).quadratic * p.g0_sq;
}

} // namespace omfp
