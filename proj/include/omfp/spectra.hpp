#pragma once

#include <complex>
#include <exception>
#include <functional>
#include <vector>

#include "omfp/fokker_planck.hpp"
#include "omfp/parallel.hpp"
#include "omfp/spectrum_series.hpp"

// Correlation spectra of the discretized generator by resolvent solves:
// S_AB(Omega) = -2 Re[ A^T (L + i Omega)^{-1} (B o P_st) ] with A, B centered
// position observables, one shifted complex factorization per frequency.

namespace omfp {

using complexd = std::complex<double>;

struct Observable {
    Eigen::VectorXcd values; ///< per-node values A(u_i), complex allowed
};

/// Sample a position-only function on the grid nodes.
template <typename F>
Observable observable_from_position(const PhaseGrid& grid, F&& f) {
    Observable a;
    a.values.resize(grid.size());
    for (int i = 0; i < grid.nx; ++i) {
        const complexd v = f(grid.u(i));
        for (int j = 0; j < grid.np; ++j) a.values[grid.index(i, j)] = v;
    }
    return a;
}

inline Observable displacement_observable(const PhaseGrid& grid) {
    return observable_from_position(grid, [](double u) { return complexd(u, 0.0); });
}

/// Stationary average of an observable.
inline complexd observable_mean(const Observable& a, const StationaryState& st) {
    complexd acc = 0.0;
    for (int k = 0; k < st.weights.size(); ++k) acc += a.values[k] * st.weights[k];
    return acc * st.grid.cell_area();
}

struct SolveOptions {
    int nx = 128;
    int np = 128;
    double padding = 5.0;
    int jobs = 1;
    RateModel rate_model = RateModel::frozen_at_equilibrium;
};

struct FokkerPlanckSolution {
    ModelParams params;
    Generator generator;
    StationaryState state;
};

inline FokkerPlanckSolution solve_fokker_planck(const ModelParams& p, const SolveOptions& opt = {}) {
    FokkerPlanckSolution sol;
    sol.params = p;
    const PhaseGrid grid = build_phase_grid(p, opt.nx, opt.np, opt.padding);
    sol.generator = assemble_generator(p, grid, opt.rate_model);
    sol.state = stationary_state(sol.generator);
    return sol;
}

/// General two-observable spectrum by one complex solve per frequency. A and
/// B are centered against the stationary state here; per-frequency solver
/// failures are recorded in `failed` (value NaN), not fatal for the series.
inline SpectrumSeries resolvent_spectrum(const Generator& gen, const StationaryState& st,
                                         Observable a, Observable b,
                                         const std::vector<double>& omegas, int jobs = 1) {
    a.values.array() -= observable_mean(a, st);
    b.values.array() -= observable_mean(b, st);

    const int n = gen.size();
    Eigen::VectorXcd v(n);
    for (int k = 0; k < n; ++k) v[k] = b.values[k] * st.weights[k];

    Eigen::SparseMatrix<complexd> base = gen.matrix.cast<complexd>();
    Eigen::SparseMatrix<complexd> eye(n, n);
    eye.setIdentity();

    SpectrumSeries out;
    out.omegas = omegas;
    out.values.assign(omegas.size(), 0.0);
    std::vector<std::size_t> failed_flags(omegas.size(), 0);

    parallel_for(omegas.size(), jobs, [&](std::size_t k) {
        Eigen::SparseMatrix<complexd> m = base + complexd(0.0, omegas[k]) * eye;
        Eigen::SparseLU<Eigen::SparseMatrix<complexd>> lu;
        lu.compute(m);
        if (lu.info() != Eigen::Success) {
            failed_flags[k] = 1;
            out.values[k] = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        Eigen::VectorXcd y = lu.solve(v);
        if (lu.info() != Eigen::Success) {
            failed_flags[k] = 1;
            out.values[k] = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        complexd s = 0.0;
        for (int q = 0; q < n; ++q) s += a.values[q] * y[q];
        out.values[k] = -2.0 * s.real();
    });
    for (std::size_t k = 0; k < failed_flags.size(); ++k)
        if (failed_flags[k]) out.failed.push_back(k);
    out.validate();
    return out;
}

/// Algebraically equivalent all-real route -2 A^T [L (L^2 + Omega^2)^{-1}] v;
/// cross-check diagnostic for the complex solves.
inline double resolvent_spectrum_real_pair(const Generator& gen, const StationaryState& st,
                                           Observable a, Observable b, double omega) {
    a.values.array() -= observable_mean(a, st);
    b.values.array() -= observable_mean(b, st);
    const int n = gen.size();
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v[k] = b.values[k].real() * st.weights[k];

    Eigen::SparseMatrix<double> eye(n, n);
    eye.setIdentity();
    Eigen::SparseMatrix<double> m = (gen.matrix * gen.matrix + omega * omega * eye).pruned();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw SolveError("resolvent_spectrum_real_pair: factorization failed");
    Eigen::VectorXd q = lu.solve(v);
    Eigen::VectorXd lq = gen.matrix * q;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += a.values[k].real() * lq[k];
    return -2.0 * s;
}

/// Displacement spectrum S_xx of a prepared solution, x_zpf^2/Omega_m units.
inline SpectrumSeries displacement_spectrum(const FokkerPlanckSolution& sol,
                                            const std::vector<double>& omegas, int jobs = 1) {
    const Observable x = displacement_observable(sol.state.grid);
    return resolvent_spectrum(sol.generator, sol.state, x, x, omegas, jobs);
}

inline SpectrumSeries displacement_spectrum(const ModelParams& p,
                                            const std::vector<double>& omegas,
                                            const SolveOptions& opt = {}) {
    return displacement_spectrum(solve_fokker_planck(p, opt), omegas, opt.jobs);
}

/// Slaved coherent cavity amplitude alpha(u) = i eps/(i Delta'(u) - kappa/2);
/// |alpha|^2 equals photon_number identically.
inline complexd coherent_cavity_field(double u, const ModelParams& p) {
    const complexd num(0.0, p.drive);
    const complexd den(-p.kappa / 2.0, effective_detuning(u, p));
    return num / den;
}

/// Stationary normalized cavity intensity S(Delta): Lorentzian kernel
/// averaged against the stationary state.
inline double cavity_population(const FokkerPlanckSolution& sol) {
    const ModelParams& p = sol.params;
    const StationaryState& st = sol.state;
    double acc = 0.0;
    const double hw2 = p.kappa * p.kappa / 4.0;
    for (int i = 0; i < st.grid.nx; ++i) {
        double col = 0.0;
        for (int j = 0; j < st.grid.np; ++j) col += st.weights[st.grid.index(i, j)];
        const double dp = effective_detuning(st.grid.u(i), p);
        acc += col * hw2 / (dp * dp + hw2);
    }
    return acc * st.grid.cell_area();
}

/// Population at a given detuning: reparameterize, resolve, average. Throws
/// InstabilityError where no thermal stationary state exists (self-
/// oscillation region); sweep drivers catch it and leave a gap.
inline double cavity_population(const ModelParams& p, double delta, const SolveOptions& opt = {}) {
    ModelParams q = p;
    q.delta = delta;
    q = make_model(q);
    return cavity_population(solve_fokker_planck(q, opt));
}

struct EmissionSpectrum {
    SpectrumSeries series;        ///< incoherent part, with coherent_weight set
    double coherent_weight = 0.0; ///< |mean alpha|^2 / n_max, delta peak at Omega = 0
    double mean_intensity = 0.0;  ///< <|alpha~|^2>/n_max, Parseval partner of the series
};

/// Cavity emission spectrum: coherent delta-peak weight plus the incoherent
/// spectrum of the slaved field fluctuations, normalized by 2 pi n_max.
inline EmissionSpectrum emission_spectrum(const FokkerPlanckSolution& sol,
                                          const std::vector<double>& omegas, int jobs = 1) {
    const ModelParams& p = sol.params;
    if (!(p.n_max > 0.0))
        throw PreconditionError("emission_spectrum: needs n_max > 0 for normalization");
    const PhaseGrid& grid = sol.state.grid;

    Observable alpha = observable_from_position(
        grid, [&](double u) { return coherent_cavity_field(u, p); });
    const complexd alpha_bar = observable_mean(alpha, sol.state);

    Observable alpha_conj = alpha;
    for (int k = 0; k < alpha_conj.values.size(); ++k)
        alpha_conj.values[k] = std::conj(alpha_conj.values[k]);

    EmissionSpectrum out;
    out.coherent_weight = std::norm(alpha_bar) / p.n_max;

    out.series = resolvent_spectrum(sol.generator, sol.state, alpha_conj, alpha, omegas, jobs);
    const double scale = 1.0 / (2.0 * pi * p.n_max);
    for (auto& v : out.series.values) v *= scale;
    out.series.coherent_weight = out.coherent_weight;

    // direct quadrature of the fluctuation intensity, for sum-rule checks
    double acc = 0.0;
    for (int i = 0; i < grid.nx; ++i) {
        double col = 0.0;
        for (int j = 0; j < grid.np; ++j) col += sol.state.weights[grid.index(i, j)];
        acc += col * std::norm(coherent_cavity_field(grid.u(i), p) - alpha_bar);
    }
    out.mean_intensity = acc * grid.cell_area() / p.n_max;
    return out;
}

/// Integral of a sampled spectrum plus the analytic 1/Omega^2 resolvent tails
/// beyond both ends (series sampled on a symmetric or one-sided grid of a
/// spectrum that decays like c/Omega^2).
inline double integrate_series_with_tail(const SpectrumSeries& s) {
    double acc = integrate_series(s);
    const double w_hi = s.omegas.back();
    acc += s.values.back() * w_hi; // int_{w}^{inf} c/x^2 dx = c/w, c = S(w) w^2
    if (s.omegas.front() < 0.0) {
        const double w_lo = -s.omegas.front();
        acc += s.values.front() * w_lo;
    }
    return acc;
}

} // namespace omfp
