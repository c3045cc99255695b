#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "omfp/model.hpp"

namespace omfp {

namespace detail {

/// Real roots of x^3 + b x^2 + c x + d, discriminant-classified so that the
/// triple-root cusp and fold points collapse cleanly instead of returning a
/// noise-split cluster.
inline std::vector<double> cubic_real_roots(double b, double c, double d) {
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double shift = -b / 3.0;
    const double disc = -4.0 * p * p * p - 27.0 * q * q; // > 0: three distinct reals
    const double scale = 4.0 * std::fabs(p * p * p) + 27.0 * q * q;
    std::vector<double> roots;
    if (std::fabs(disc) <= 1e-12 * scale || scale == 0.0) {
        if (p == 0.0 && q == 0.0) {
            roots = {shift}; // triple root
        } else if (std::fabs(p) * std::fabs(p) < 1e-24 * scale) {
            roots = {std::cbrt(-q) + shift};
        } else {
            // double root a, simple root -2a
            const double a = -1.5 * q / p;
            roots = {a + shift, -2.0 * a + shift};
        }
    } else if (disc > 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (p * m);
        arg = std::clamp(arg, -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(theta - 2.0 * pi * k / 3.0) + shift);
    } else {
        const double s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
        const double a = std::cbrt(-q / 2.0 + (q >= 0 ? -s : s));
        const double t = a == 0.0 ? 0.0 : a - p / (3.0 * a);
        roots = {t + shift};
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace detail

struct Equilibrium {
    double delta_prime = 0.0;     ///< effective detuning at the root
    double u = 0.0;               ///< displacement, x_zpf units
    bool is_minimum = false;      ///< V_eff'' > 0
    bool self_oscillating = false;///< Gamma_tot < 0 at the root
};

struct EquilibriumSet {
    std::vector<Equilibrium> roots; ///< sorted by delta_prime, length 1 or 3
    bool degenerate_collapsed = false;

    std::vector<Equilibrium> stable_minima() const {
        std::vector<Equilibrium> out;
        for (const auto& r : roots)
            if (r.is_minimum) out.push_back(r);
        return out;
    }
    /// Minima that also have positive total damping.
    std::vector<Equilibrium> damped_minima() const {
        std::vector<Equilibrium> out;
        for (const auto& r : roots)
            if (r.is_minimum && !r.self_oscillating) out.push_back(r);
        return out;
    }
};

/// Force-balance residual in Delta' with the Lorentzian multiplied out:
/// (Delta'-Delta)(1 + (2 Delta'/kappa)^2) - lambda kappa n_max.
inline double equilibrium_residual(double delta_prime, const ModelParams& p) {
    const double x = 2.0 * delta_prime / p.kappa;
    return (delta_prime - p.delta) * (1.0 + x * x) - p.lambda * p.kappa * p.n_max;
}

/// All equilibrium positions of the effective potential, classified by
/// static stability (sign of V_eff'') and dynamical stability (sign of
/// Gamma_tot). Degenerate roots (cusp, folds) are collapsed so the count is
/// always 1 or 3.
inline EquilibriumSet equilibrium_positions(const ModelParams& p) {
    // multiply out the force balance: monic cubic in Delta'
    const double k2 = p.kappa * p.kappa / 4.0;
    const double b = -p.delta;
    const double c = k2;
    const double d = -k2 * (p.delta + p.lambda * p.kappa * p.n_max);
    std::vector<double> roots = detail::cubic_real_roots(b, c, d);

    // Newton polish on the residual
    for (double& r : roots) {
        for (int it = 0; it < 3; ++it) {
            const double f = r * r * r + b * r * r + c * r + d;
            const double df = 3.0 * r * r + 2.0 * b * r + c;
            if (df == 0.0) break;
            const double step = f / df;
            if (!std::isfinite(step)) break;
            r -= step;
        }
    }
    std::sort(roots.begin(), roots.end());

    EquilibriumSet set;
    const double merge_tol = 1e-8 * p.kappa;
    std::vector<double> merged;
    for (double r : roots) {
        if (!merged.empty() && std::fabs(r - merged.back()) <= merge_tol) {
            merged.back() = 0.5 * (merged.back() + r);
            set.degenerate_collapsed = true;
        } else {
            merged.push_back(r);
        }
    }
    if (merged.size() == 2) {
        // fold: one of the two is a marginal double root. Drop the one with
        // (nearly) vanishing curvature and keep the genuine minimum.
        const double u0 = (merged[0] - p.delta) / p.g0;
        const double u1 = (merged[1] - p.delta) / p.g0;
        if (std::fabs(potential_curvature(u0, p)) < std::fabs(potential_curvature(u1, p)))
            merged.erase(merged.begin());
        else
            merged.erase(merged.begin() + 1);
        set.degenerate_collapsed = true;
    }

    for (double r : merged) {
        Equilibrium e;
        e.delta_prime = r;
        e.u = p.g0 > 0.0 ? (r - p.delta) / p.g0 : 0.0;
        const double curv = potential_curvature(e.u, p);
        // at the collapsed cusp the curvature vanishes but the quartic term
        // is positive, so the point is still a minimum
        e.is_minimum = std::fabs(curv) < 1e-10 ? true : curv > 0.0;
        e.self_oscillating = total_damping(e.u, p) < 0.0;
        set.roots.push_back(e);
    }
    return set;
}

struct QuarticPointParams {
    double n_max_star;
    double delta_star;
};

/// Photon number and detuning at which the effective potential is purely
/// quartic about Delta'_*.
inline QuarticPointParams quartic_point(double lambda, double kappa) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("quartic_point: lambda must be > 0");
    return {4.0 / (3.0 * sqrt3 * lambda), -sqrt3 * kappa / 2.0};
}

struct RenormalizedFrequency {
    double value = 1.0;
    bool at_quartic_point = false;
};

/// Optical-spring renormalized frequency along the tuning line:
/// sqrt(1 - n~) below the quartic point, sqrt(2(n~ - 1)) above, 0 at it.
inline RenormalizedFrequency renormalized_frequency(double n_max, const ModelParams& p) {
    const double nt = n_max / p.n_max_star;
    if (std::fabs(nt - 1.0) <= 1e-12) return {0.0, true};
    if (nt < 1.0) return {std::sqrt(1.0 - nt), false};
    return {std::sqrt(2.0 * (nt - 1.0)), false};
}

struct RegionMap {
    std::vector<double> n_axis;
    std::vector<double> delta_axis;
    std::vector<double> q_values;
    std::vector<std::uint8_t> bistable;  ///< n-major, delta fastest
    std::vector<std::uint8_t> unstable;  ///< cell-major, then per Q

    std::size_t cell_index(std::size_t i_n, std::size_t j_d) const {
        return i_n * delta_axis.size() + j_d;
    }

    void to_csv(std::ostream& os) const {
        os << "n_max,delta,bistable";
        for (double q : q_values) os << ",unstable_q" << q;
        os << "\n";
        for (std::size_t i = 0; i < n_axis.size(); ++i) {
            for (std::size_t j = 0; j < delta_axis.size(); ++j) {
                const std::size_t cell = cell_index(i, j);
                os << n_axis[i] << ',' << delta_axis[j] << ',' << int(bistable[cell]);
                for (std::size_t k = 0; k < q_values.size(); ++k)
                    os << ',' << int(unstable[cell * q_values.size() + k]);
                os << "\n";
            }
        }
    }
};

/// Classify every (n_max, delta) cell: bistable iff the force balance has
/// three real roots; dynamically unstable for a given Q iff Gamma_tot < 0 at
/// some statically stable root with Gamma_m = 1/Q.
inline RegionMap stability_region_map(const ModelParams& base,
                                      std::vector<double> n_axis,
                                      std::vector<double> delta_axis,
                                      std::vector<double> q_values) {
    if (n_axis.empty() || delta_axis.empty())
        throw std::invalid_argument("stability_region_map: axes must be nonempty");
    for (std::size_t i = 1; i < n_axis.size(); ++i)
        if (!(n_axis[i] > n_axis[i - 1]))
            throw std::invalid_argument("stability_region_map: n axis must be increasing");
    for (std::size_t j = 1; j < delta_axis.size(); ++j)
        if (!(delta_axis[j] > delta_axis[j - 1]))
            throw std::invalid_argument("stability_region_map: delta axis must be increasing");

    RegionMap map;
    map.n_axis = std::move(n_axis);
    map.delta_axis = std::move(delta_axis);
    map.q_values = std::move(q_values);
    const std::size_t nq = map.q_values.size();
    map.bistable.assign(map.n_axis.size() * map.delta_axis.size(), 0);
    map.unstable.assign(map.n_axis.size() * map.delta_axis.size() * nq, 0);

    for (std::size_t i = 0; i < map.n_axis.size(); ++i) {
        for (std::size_t j = 0; j < map.delta_axis.size(); ++j) {
            ModelParams p = base;
            p.n_max = map.n_axis[i];
            p.delta = map.delta_axis[j];
            p = make_model(p);
            const EquilibriumSet set = equilibrium_positions(p);
            const std::size_t cell = map.cell_index(i, j);
            map.bistable[cell] = set.roots.size() == 3 ? 1 : 0;
            for (std::size_t k = 0; k < nq; ++k) {
                const double gamma_q = 1.0 / map.q_values[k];
                bool unstable = false;
                for (const auto& r : set.roots)
                    if (r.is_minimum && gamma_q + optical_damping(r.u, p) < 0.0)
                        unstable = true;
                map.unstable[cell * nq + k] = unstable ? 1 : 0;
            }
        }
    }
    return map;
}

} // namespace omfp
