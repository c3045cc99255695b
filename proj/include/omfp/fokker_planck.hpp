#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "omfp/equilibria.hpp"
#include "omfp/model.hpp"
#include "omfp/special.hpp"

// Phase-space discretization of the semiclassical kinetic equation
//   dP/dt = [-w d_u - F_w(u) d_w + Gamma_tot(u) d_w w + (D_tot(u)/2) d_w^2] P
// as a finite-volume generator: central fluxes for the u-advection and
// Scharfetter-Gummel (exponentially fitted) fluxes for the w drift-diffusion.
// Face-shared coefficients make the column sums of L vanish identically, so
// the discretization conserves probability to rounding.

namespace omfp {

struct PhaseGrid {
    int nx = 0, np = 0;
    double u_min = 0, u_max = 0, w_min = 0, w_max = 0;
    double h_u = 0, h_w = 0;

    double u(int i) const { return u_min + (double(i) + 0.5) * h_u; }
    double w(int j) const { return w_min + (double(j) + 0.5) * h_w; }
    int index(int i, int j) const { return i * np + j; }
    int size() const { return nx * np; }
    double cell_area() const { return h_u * h_w; }

    void validate() const {
        if (nx < 16 || np < 16)
            throw std::invalid_argument("PhaseGrid: need at least 16 nodes per axis");
        if (!(u_max > u_min) || !(w_max > w_min) || !std::isfinite(u_min) ||
            !std::isfinite(u_max) || !std::isfinite(w_min) || !std::isfinite(w_max))
            throw std::invalid_argument("PhaseGrid: window must be finite and ordered");
    }
};

/// Analytic fourth derivative of V_eff, used for the quartic thermal width
/// when the local curvature is too small to set a harmonic one.
inline double potential_fourth_derivative(double u, const ModelParams& p) {
    const double dp = effective_detuning(u, p);
    const double c2 = p.kappa * p.kappa / 4.0;
    const double den = dp * dp + c2;
    const double amp = p.n_max * c2; // n(dp) = amp/den
    const double n3 = 24.0 * amp * dp * (c2 - dp * dp) / (den * den * den * den);
    return -p.g0_sq * p.g0_sq * n3;
}

namespace detail {

/// Thermal standard deviation of u around a potential minimum: harmonic when
/// the curvature supports it, quartic-well width otherwise, the smaller of
/// the two when both exist.
inline double local_thermal_width(double u_e, double temperature, const ModelParams& p) {
    const double curv = potential_curvature(u_e, p);
    const double nu_loc = potential_fourth_derivative(u_e, p) / 24.0;
    double sigma = std::numeric_limits<double>::infinity();
    if (curv > 1e-9) sigma = std::min(sigma, std::sqrt(temperature / curv));
    if (nu_loc > 1e-14)
        sigma = std::min(sigma, std::pow(temperature / nu_loc, 0.25) *
                                    std::sqrt(gamma_fn(0.75) / gamma_fn(0.25)));
    if (!std::isfinite(sigma))
        throw SolveError("local_thermal_width: potential locally flat, cannot size window");
    return sigma;
}

} // namespace detail

/// Auto-sized phase-space window: centered on the equilibrium set, extended
/// `padding_sigmas` thermal widths past every potential minimum. Fails when
/// every minimum is dynamically unstable (no thermal stationary state).
inline PhaseGrid build_phase_grid(const ModelParams& p, int nx, int np,
                                  double padding_sigmas) {
    if (!(padding_sigmas >= 3.0))
        throw std::invalid_argument("build_phase_grid: padding_sigmas must be >= 3");
    const EquilibriumSet set = equilibrium_positions(p);
    const auto minima = set.stable_minima();
    const auto damped = set.damped_minima();
    if (minima.empty())
        throw InstabilityError("build_phase_grid: no stable equilibrium");
    if (damped.empty())
        throw InstabilityError("build_phase_grid: all stable equilibria are dynamically unstable");

    double t_max = 0.0;
    for (const auto& e : damped)
        t_max = std::max(t_max, effective_temperature(p, e.u));

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& e : minima) {
        // undamped minima borrow the hottest damped temperature for sizing
        double t_loc = t_max;
        if (!e.self_oscillating) t_loc = effective_temperature(p, e.u);
        const double sigma = detail::local_thermal_width(e.u, t_loc, p);
        lo = std::min(lo, e.u - padding_sigmas * sigma);
        hi = std::max(hi, e.u + padding_sigmas * sigma);
    }

    PhaseGrid g;
    g.nx = nx;
    g.np = np;
    g.u_min = lo;
    g.u_max = hi;
    const double w_half = padding_sigmas * std::sqrt(2.0 * t_max);
    g.w_min = -w_half;
    g.w_max = w_half;
    g.h_u = (g.u_max - g.u_min) / double(nx);
    g.h_w = (g.w_max - g.w_min) / double(np);
    g.validate();
    return g;
}

struct Generator {
    ModelParams params;
    PhaseGrid grid;
    RateModel rate_model = RateModel::frozen_at_equilibrium;
    double anchor_u = 0.0; ///< equilibrium at which frozen rates are evaluated
    Eigen::SparseMatrix<double> matrix; ///< generator L, density convention

    int size() const { return grid.size(); }
};

/// Equilibrium anchoring the frozen kinetic rates (and the normalization row
/// of the stationary solve): the leftmost damped minimum, or the leftmost
/// minimum when none is damped.
inline double rate_anchor_u(const ModelParams& p) {
    const EquilibriumSet set = equilibrium_positions(p);
    const auto damped = set.damped_minima();
    if (!damped.empty()) return damped.front().u;
    const auto minima = set.stable_minima();
    if (!minima.empty()) return minima.front().u;
    return set.roots.front().u;
}

namespace detail {

/// Bernoulli function x/(e^x - 1) of the exponential fitting scheme.
inline double bernoulli(double x) {
    if (std::fabs(x) < 1e-8) return 1.0 - 0.5 * x;
    if (x < -700.0) return -x;
    const double e = std::expm1(x);
    return std::isinf(e) ? 0.0 : x / e;
}

} // namespace detail

/// Assemble the sparse generator on the grid. Zero-flux (reflecting)
/// boundaries on all four edges. The drift always carries the full effective
/// potential; the damping/diffusion kernels follow the rate model.
inline Generator assemble_generator(const ModelParams& p, const PhaseGrid& grid,
                                    RateModel rates = RateModel::frozen_at_equilibrium) {
    grid.validate();
    Generator gen;
    gen.params = p;
    gen.grid = grid;
    gen.rate_model = rates;
    gen.anchor_u = rate_anchor_u(p);
    const int nx = grid.nx, np = grid.np;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(grid.size()) * 6);

    std::vector<double> drift(nx), damping(nx), diffusion(nx);
    for (int i = 0; i < nx; ++i) {
        const double u = grid.u(i);
        drift[i] = momentum_drift(u, p);
        const double u_rate = rates == RateModel::frozen_at_equilibrium ? gen.anchor_u : u;
        damping[i] = total_damping(u_rate, p);
        diffusion[i] = total_diffusion(u_rate, p);
    }

    // u-advection, central face average: J = w (P_i + P_{i+1})/2
    for (int i = 0; i + 1 < nx; ++i) {
        for (int j = 0; j < np; ++j) {
            const double coef = grid.w(j) / (2.0 * grid.h_u);
            const int a = grid.index(i, j), b = grid.index(i + 1, j);
            trips.emplace_back(a, a, -coef);
            trips.emplace_back(a, b, -coef);
            trips.emplace_back(b, a, coef);
            trips.emplace_back(b, b, coef);
        }
    }

    // w drift-diffusion, Scharfetter-Gummel flux between j and j+1:
    // J = (d/h)[B(-Pe) P_j - B(Pe) P_{j+1}], Pe = a h / d
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j + 1 < np; ++j) {
            const double w_face = grid.w_min + double(j + 1) * grid.h_w;
            const double adv = drift[i] - damping[i] * w_face;
            const double d = 0.5 * diffusion[i];
            double c_lo, c_hi; // J = c_lo P_j + c_hi P_{j+1}
            if (d > 0.0) {
                const double pe = adv * grid.h_w / d;
                c_lo = d / grid.h_w * detail::bernoulli(-pe);
                c_hi = -d / grid.h_w * detail::bernoulli(pe);
            } else if (adv >= 0.0) {
                c_lo = adv;
                c_hi = 0.0;
            } else {
                c_lo = 0.0;
                c_hi = adv;
            }
            const int a = grid.index(i, j), b = grid.index(i, j + 1);
            const double inv_h = 1.0 / grid.h_w;
            trips.emplace_back(a, a, -c_lo * inv_h);
            trips.emplace_back(a, b, -c_hi * inv_h);
            trips.emplace_back(b, a, c_lo * inv_h);
            trips.emplace_back(b, b, c_hi * inv_h);
        }
    }

    gen.matrix.resize(grid.size(), grid.size());
    gen.matrix.setFromTriplets(trips.begin(), trips.end());
    gen.matrix.makeCompressed();
    return gen;
}

/// Largest absolute column sum of L; identically zero discretizations leave
/// only rounding residue here.
inline double max_abs_column_sum(const Eigen::SparseMatrix<double>& m) {
    double worst = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        double s = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) s += it.value();
        worst = std::max(worst, std::fabs(s));
    }
    return worst;
}

inline double matrix_inf_norm(const Eigen::SparseMatrix<double>& m) {
    Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            row_abs[it.row()] += std::fabs(it.value());
    return row_abs.maxCoeff();
}

struct StationaryState {
    PhaseGrid grid;
    Eigen::VectorXd weights; ///< density values P_i, sum * cell area = 1
    double mean_u = 0, var_u = 0, mean_w = 0, var_w = 0;
    double t_eff_fit = 0;      ///< var(w)/2: Gibbs momentum-marginal fit
    double boundary_mass = 0;  ///< probability on edge cells
    bool window_warning = false;
    double residual_inf = 0;   ///< ||L P||_inf after clip and renormalize
    double clipped_mass = 0;

    std::vector<double> marginal_u() const {
        std::vector<double> m(std::size_t(grid.nx), 0.0);
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.np; ++j)
                m[std::size_t(i)] += weights[grid.index(i, j)] * grid.h_w;
        return m;
    }
    std::vector<double> marginal_w() const {
        std::vector<double> m(std::size_t(grid.np), 0.0);
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.np; ++j)
                m[std::size_t(j)] += weights[grid.index(i, j)] * grid.h_u;
        return m;
    }
};

namespace detail {

inline void fill_diagnostics(StationaryState& st) {
    const PhaseGrid& g = st.grid;
    const double area = g.cell_area();
    double mu = 0, mw = 0, muu = 0, mww = 0, edge = 0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.np; ++j) {
            const double p = st.weights[g.index(i, j)] * area;
            mu += p * g.u(i);
            mw += p * g.w(j);
            muu += p * g.u(i) * g.u(i);
            mww += p * g.w(j) * g.w(j);
            if (i == 0 || j == 0 || i == g.nx - 1 || j == g.np - 1) edge += p;
        }
    }
    st.mean_u = mu;
    st.mean_w = mw;
    st.var_u = muu - mu * mu;
    st.var_w = mww - mw * mw;
    st.t_eff_fit = 0.5 * st.var_w;
    st.boundary_mass = edge;
    st.window_warning = edge > 1e-6;
}

} // namespace detail

/// Stationary density of the generator: the probability-normalized null
/// vector, obtained by replacing one (redundant) row of L with the
/// normalization equation. Negative rounding residue is clipped at 1e-14 of
/// the peak and the state renormalized.
inline StationaryState stationary_state(const Generator& gen) {
    const int n = gen.size();
    const double area = gen.grid.cell_area();

    // anchor the normalization row at the most probable region: the cell
    // nearest the tracked equilibrium
    const int i_ref = int(std::clamp((gen.anchor_u - gen.grid.u_min) / gen.grid.h_u, 0.5,
                                     double(gen.grid.nx) - 0.5));
    const int anchor = gen.grid.index(i_ref, gen.grid.np / 2);

    // the replaced row is exact (the column sums of L vanish, so one row is
    // redundant); scale it to the magnitude of the generator entries so the
    // factorization stays well behaved
    const double l_inf = matrix_inf_norm(gen.matrix);
    const double row_scale = l_inf > 0.0 ? l_inf : 1.0;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(gen.matrix.nonZeros()) + std::size_t(n));
    for (int k = 0; k < gen.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(gen.matrix, k); it; ++it)
            if (it.row() != anchor) trips.emplace_back(int(it.row()), int(it.col()), it.value());
    for (int c = 0; c < n; ++c) trips.emplace_back(anchor, c, area * row_scale);
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[anchor] = row_scale;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw SolveError("stationary_state: sparse factorization failed");
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw SolveError("stationary_state: solve failed");
    // one step of iterative refinement
    Eigen::VectorXd resid = rhs - m * x;
    x += lu.solve(resid);

    StationaryState st;
    st.grid = gen.grid;
    const double peak = x.maxCoeff();
    if (!(peak > 0.0)) throw SolveError("stationary_state: nonpositive solution");
    const double clip = 1e-14 * peak;
    double clipped = 0.0;
    for (int i = 0; i < n; ++i)
        if (x[i] < clip) {
            clipped += std::fabs(x[i]) * area;
            x[i] = 0.0;
        }
    st.clipped_mass = clipped;
    x /= x.sum() * area;
    st.weights = x;

    st.residual_inf = (gen.matrix * x).cwiseAbs().maxCoeff();
    if (st.residual_inf > 1e-8 * l_inf * x.maxCoeff())
        throw SolveError("stationary_state: no-convergence (residual above contract)");
    detail::fill_diagnostics(st);
    return st;
}

/// Gibbs state exp(-(w^2/4 + V_eff(u))/T) sampled and normalized on the grid.
inline StationaryState gibbs_reference(const ModelParams& p, const PhaseGrid& grid,
                                       double temperature) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("gibbs_reference: temperature must be > 0");
    StationaryState st;
    st.grid = grid;
    st.weights.resize(grid.size());
    double v_min = std::numeric_limits<double>::infinity();
    std::vector<double> v(std::size_t(grid.nx));
    for (int i = 0; i < grid.nx; ++i) {
        v[std::size_t(i)] = effective_potential(grid.u(i), p);
        v_min = std::min(v_min, v[std::size_t(i)]);
    }
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.np; ++j) {
            const double e = 0.25 * grid.w(j) * grid.w(j) + v[std::size_t(i)] - v_min;
            st.weights[grid.index(i, j)] = std::exp(-e / temperature);
        }
    st.weights /= st.weights.sum() * grid.cell_area();
    detail::fill_diagnostics(st);
    return st;
}

/// Stationary average of the total damping rate.
inline double average_damping(const StationaryState& st, const ModelParams& p) {
    double acc = 0.0;
    for (int i = 0; i < st.grid.nx; ++i) {
        double col = 0.0;
        for (int j = 0; j < st.grid.np; ++j) col += st.weights[st.grid.index(i, j)];
        acc += col * total_damping(st.grid.u(i), p);
    }
    return acc * st.grid.cell_area();
}

inline void stationary_to_csv(const StationaryState& st, std::ostream& os) {
    os << "u,w,P\n";
    char buf[96];
    for (int i = 0; i < st.grid.nx; ++i)
        for (int j = 0; j < st.grid.np; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", st.grid.u(i), st.grid.w(j),
                          st.weights[st.grid.index(i, j)]);
            os << buf;
        }
}

inline std::string diagnostics_json(const StationaryState& st) {
    std::ostringstream os;
    os.precision(17);
    os << "{\n"
       << "  \"mean_u\": " << st.mean_u << ",\n"
       << "  \"var_u\": " << st.var_u << ",\n"
       << "  \"mean_w\": " << st.mean_w << ",\n"
       << "  \"var_w\": " << st.var_w << ",\n"
       << "  \"t_eff_fit\": " << st.t_eff_fit << ",\n"
       << "  \"boundary_mass\": " << st.boundary_mass << ",\n"
       << "  \"window_warning\": " << (st.window_warning ? "true" : "false") << ",\n"
       << "  \"residual_inf\": " << st.residual_inf << ",\n"
       << "  \"clipped_mass\": " << st.clipped_mass << ",\n"
       << "  \"grid\": {\"nx\": " << st.grid.nx << ", \"np\": " << st.grid.np
       << ", \"u_min\": " << st.grid.u_min << ", \"u_max\": " << st.grid.u_max
       << ", \"w_min\": " << st.grid.w_min << ", \"w_max\": " << st.grid.w_max << "}\n"
       << "}\n";
    return os.str();
}

} // namespace omfp
