#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "omfp/fokker_planck.hpp"
#include "oracles.hpp"

using namespace omfp;

namespace {

ModelParams quartic_preset() {
    ModelParams p;
    p.kappa = 100.0;
    p.lambda = 0.01;
    p.gamma_m = 1e-3;
    p.bath_temperature = 10.0;
    p = make_model(p);
    p.n_max = p.n_max_star;
    p.delta = p.delta_star;
    return make_model(p);
}

ModelParams bare_oscillator(double gamma_m = 1e-3, double t_bath = 10.0) {
    ModelParams p;
    p.kappa = 100.0;
    p.lambda = 0.01;
    p.n_max = 0.0;
    p.gamma_m = gamma_m;
    p.bath_temperature = t_bath;
    return make_model(p);
}

} // namespace

TEST_CASE("phase grid sizing") {
    ModelParams p = bare_oscillator();
    const PhaseGrid g = build_phase_grid(p, 64, 64, 4.0);
    // harmonic variance 2 k_B T/(hbar Omega) ~ 20 in zero-point units
    const double sigma = std::sqrt(2.0 * effective_temperature(p, 0.0));
    CHECK(g.u_min == Catch::Approx(-4.0 * sigma).epsilon(1e-12));
    CHECK(g.u_max == Catch::Approx(4.0 * sigma).epsilon(1e-12));
    CHECK(g.w_min == Catch::Approx(-4.0 * sigma).epsilon(1e-12));
    CHECK(std::fabs(sigma - std::sqrt(20.0)) < 0.01);

    CHECK_THROWS_AS(build_phase_grid(p, 64, 64, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(build_phase_grid(p, 8, 64, 4.0), std::invalid_argument);

    // quartic point: window must cover the wide flat-bottom support
    ModelParams q = quartic_preset();
    const PhaseGrid gq = build_phase_grid(q, 64, 64, 3.0);
    const double u_star = (q.delta_prime_star - q.delta) / q.g0;
    CHECK(gq.u_min < u_star - 40.0);
    CHECK(gq.u_max > u_star + 40.0);

    // heated single equilibrium: no thermal window exists
    ModelParams h = bare_oscillator(0.0, 0.0);
    h.n_max = 5.0;
    h.delta = 20.0;
    h = make_model(h);
    CHECK_THROWS_AS(build_phase_grid(h, 64, 64, 4.0), InstabilityError);
}

TEST_CASE("generator conserves probability exactly") {
    ModelParams p = quartic_preset();
    const PhaseGrid g = build_phase_grid(p, 48, 48, 4.0);
    const Generator gen = assemble_generator(p, g);

    double max_abs = 0.0;
    for (int k = 0; k < gen.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(gen.matrix, k); it; ++it)
            max_abs = std::max(max_abs, std::fabs(it.value()));
    CHECK(max_abs_column_sum(gen.matrix) <= 1e-12 * max_abs);

    // constant density: no net probability creation
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(gen.size());
    CHECK(std::fabs((gen.matrix * ones).sum()) * g.cell_area() <= 1e-10 * max_abs);

    // random density too (column sums are the stronger statement)
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> du(0.0, 1.0);
    Eigen::VectorXd r(gen.size());
    for (int i = 0; i < gen.size(); ++i) r[i] = du(rng);
    CHECK(std::fabs((gen.matrix * r).sum()) * g.cell_area() <=
          1e-10 * max_abs * std::sqrt(double(gen.size())));
}

TEST_CASE("generator annihilates the Gibbs state to second order") {
    ModelParams p = bare_oscillator();
    const double t_gibbs = 0.5 * coth(0.5 / p.bath_temperature);
    double residual[3];
    int idx = 0;
    for (int n : {32, 64, 128}) {
        PhaseGrid g;
        g.nx = g.np = n;
        g.u_min = g.w_min = -25.0;
        g.u_max = g.w_max = 25.0;
        g.h_u = (g.u_max - g.u_min) / n;
        g.h_w = (g.w_max - g.w_min) / n;
        const Generator gen = assemble_generator(p, g);
        const StationaryState gibbs = gibbs_reference(p, g, t_gibbs);
        const Eigen::VectorXd res = gen.matrix * gibbs.weights;
        // the interior truncation error is the quantity under study; the
        // outermost frame carries the reflecting-wall flux truncation, which
        // is set by the (tiny) boundary density, not by h
        double sup = 0.0;
        for (int i = 1; i + 1 < g.nx; ++i)
            for (int j = 1; j + 1 < g.np; ++j)
                sup = std::max(sup, std::fabs(res[g.index(i, j)]));
        residual[idx++] = sup / gibbs.weights.maxCoeff();
    }
    CHECK(residual[0] / residual[1] == Catch::Approx(4.0).margin(1.2));
    CHECK(residual[1] / residual[2] == Catch::Approx(4.0).margin(1.2));
}

TEST_CASE("drift-only generator rotates phase-space mass") {
    // conservative oscillator: no damping, no diffusion
    ModelParams p = bare_oscillator(0.0, 0.0);
    PhaseGrid g;
    g.nx = g.np = 64;
    g.u_min = g.w_min = -8.0;
    g.u_max = g.w_max = 8.0;
    g.h_u = g.h_w = 16.0 / 64;
    const Generator gen = assemble_generator(p, g);

    // Gaussian blob at (u0, 0)
    const double u0 = 3.0, s2 = 0.5;
    Eigen::VectorXd density(g.size());
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.np; ++j)
            density[g.index(i, j)] =
                std::exp(-(std::pow(g.u(i) - u0, 2) + std::pow(g.w(j), 2)) / (2.0 * s2));
    density /= density.sum() * g.cell_area();

    const double mass0 = density.sum() * g.cell_area();
    const double t_final = 0.4;
    const int n_steps = 4000;
    const double dt = t_final / n_steps;
    // RK4 in time on the semi-discrete system
    for (int s = 0; s < n_steps; ++s) {
        Eigen::VectorXd k1 = gen.matrix * density;
        Eigen::VectorXd k2 = gen.matrix * (density + 0.5 * dt * k1);
        Eigen::VectorXd k3 = gen.matrix * (density + 0.5 * dt * k2);
        Eigen::VectorXd k4 = gen.matrix * (density + dt * k3);
        density += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double mass1 = density.sum() * g.cell_area();
    CHECK(mass1 == Catch::Approx(mass0).epsilon(1e-12));

    double mu = 0.0, mw = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.np; ++j) {
            mu += density[g.index(i, j)] * g.u(i);
            mw += density[g.index(i, j)] * g.w(j);
        }
    mu *= g.cell_area();
    mw *= g.cell_area();
    // characteristics of u' = w, w' = -u: center moves to (u0 cos t, -u0 sin t)
    CHECK(mu == Catch::Approx(u0 * std::cos(t_final)).margin(0.02 * u0));
    CHECK(mw == Catch::Approx(-u0 * std::sin(t_final)).margin(0.02 * u0));
}

TEST_CASE("decoupled oscillator relaxes to the bath Gaussian") {
    ModelParams p = bare_oscillator();
    const PhaseGrid g = build_phase_grid(p, 96, 96, 5.0);
    const Generator gen = assemble_generator(p, g);
    const StationaryState st = stationary_state(gen);

    CHECK(st.weights.sum() * g.cell_area() == Catch::Approx(1.0).epsilon(1e-13));
    CHECK(st.weights.minCoeff() >= 0.0);
    CHECK(std::fabs(st.mean_u) < 1e-8);
    CHECK(std::fabs(st.mean_w) < 1e-6);

    const double var_expect = coth(0.5 / p.bath_temperature); // 2 T_classical
    CHECK(st.var_u == Catch::Approx(2.0 * 10.0).epsilon(5e-3));
    CHECK(st.var_w == Catch::Approx(var_expect).epsilon(5e-3));

    // KL divergence against the closed-form Gibbs state
    const StationaryState ref = gibbs_reference(p, g, 0.5 * var_expect);
    double kl = 0.0;
    for (int k = 0; k < st.weights.size(); ++k) {
        if (st.weights[k] <= 0.0 || ref.weights[k] <= 0.0) continue;
        kl += st.weights[k] * std::log(st.weights[k] / ref.weights[k]) * g.cell_area();
    }
    CHECK(kl >= -1e-12);
    CHECK(kl < 1e-4);

    CHECK(st.boundary_mass < 1e-6);
    CHECK_FALSE(st.window_warning);
    CHECK(st.t_eff_fit == Catch::Approx(10.0).epsilon(0.01));

    // stationarity residual contract
    const double l_inf = matrix_inf_norm(gen.matrix);
    CHECK(st.residual_inf <= 1e-8 * l_inf * st.weights.maxCoeff());
}

TEST_CASE("window independence of the stationary moments") {
    ModelParams p = bare_oscillator();
    const PhaseGrid g3 = build_phase_grid(p, 128, 128, 3.0);
    const PhaseGrid g6 = build_phase_grid(p, 128, 128, 6.0);
    const StationaryState s3 = stationary_state(assemble_generator(p, g3));
    const StationaryState s6 = stationary_state(assemble_generator(p, g6));
    CHECK(s3.var_u == Catch::Approx(s6.var_u).epsilon(1e-3));
    CHECK(s3.var_w == Catch::Approx(s6.var_w).epsilon(1e-3));
}

TEST_CASE("quartic-point stationary state matches the Gibbs form") {
    ModelParams p = quartic_preset();
    const double u_star = (p.delta_prime_star - p.delta) / p.g0;
    const double t_eff = effective_temperature(p, u_star);

    const PhaseGrid g = build_phase_grid(p, 128, 128, 4.0);
    const Generator gen = assemble_generator(p, g);
    const StationaryState st = stationary_state(gen);
    const StationaryState ref = gibbs_reference(p, g, t_eff);

    const double peak = ref.weights.maxCoeff();
    const double sup = (st.weights - ref.weights).cwiseAbs().maxCoeff();
    CHECK(sup <= 0.02 * peak);

    // momentum marginal is Gaussian with variance 2 T_eff
    CHECK(st.var_w == Catch::Approx(2.0 * t_eff).epsilon(0.01));
    CHECK(std::fabs(st.mean_w) < 1e-6);

    // mesh convergence of the displacement variance
    const PhaseGrid g2 = build_phase_grid(p, 256, 256, 4.0);
    const StationaryState st2 = stationary_state(assemble_generator(p, g2));
    CHECK(st.var_u == Catch::Approx(st2.var_u).epsilon(5e-3));
}

TEST_CASE("position-dependent rates heat the wide quartic well") {
    // with the kernels varying across the support the right flank approaches
    // cavity resonance, where the local FDT temperature diverges; the state
    // comes out measurably hotter than the frozen-rate Gibbs form
    ModelParams p = quartic_preset();
    const PhaseGrid g = build_phase_grid(p, 96, 96, 4.0);
    const StationaryState frozen = stationary_state(assemble_generator(p, g));
    const StationaryState full =
        stationary_state(assemble_generator(p, g, RateModel::position_dependent));
    CHECK(full.var_w > 1.15 * frozen.var_w);
    CHECK(full.var_u > 1.05 * frozen.var_u);
}

TEST_CASE("average damping") {
    ModelParams p0 = bare_oscillator(2.5e-3, 10.0);
    const PhaseGrid g0 = build_phase_grid(p0, 64, 64, 5.0);
    const StationaryState s0 = stationary_state(assemble_generator(p0, g0));
    CHECK(average_damping(s0, p0) == Catch::Approx(p0.gamma_m).epsilon(1e-12));

    // quartic point: average damping well below the anharmonic linewidth
    ModelParams pq = quartic_preset();
    const PhaseGrid gq = build_phase_grid(pq, 96, 96, 4.0);
    const StationaryState sq = stationary_state(assemble_generator(pq, gq));
    const double gamma_avg = average_damping(sq, pq);
    CHECK(gamma_avg > 0.0);
    const double u_star = (pq.delta_prime_star - pq.delta) / pq.g0;
    const double t_eff = effective_temperature(pq, u_star);
    const double omega_peak =
        pi / (2.0 * elliptic_k_minus1()) * std::pow(3.0 * pq.lambda * t_eff / pq.kappa, 0.25);
    const double width = 0.585 * omega_peak;
    CHECK(gamma_avg / width < 0.2);

    // all-cooling support: optical damping keeps the average positive
    ModelParams pc = quartic_preset();
    pc.gamma_m = 0.0;
    pc.bath_temperature = 0.0;
    pc = make_model(pc);
    pc.n_max = 0.3 * pc.n_max_star;
    pc.delta = tuning_line_detuning(pc.n_max, pc);
    pc = make_model(pc);
    const PhaseGrid gc = build_phase_grid(pc, 64, 64, 4.0);
    const StationaryState sc = stationary_state(assemble_generator(pc, gc));
    CHECK(average_damping(sc, pc) > 0.0);
}

TEST_CASE("narrow window raises the boundary-mass warning") {
    ModelParams p = bare_oscillator();
    PhaseGrid g;
    g.nx = g.np = 48;
    const double sigma = std::sqrt(20.0);
    g.u_min = g.w_min = -2.0 * sigma;
    g.u_max = g.w_max = 2.0 * sigma;
    g.h_u = g.h_w = 4.0 * sigma / 48;
    const StationaryState st = stationary_state(assemble_generator(p, g));
    CHECK(st.boundary_mass > 1e-6);
    CHECK(st.window_warning);
}

TEST_CASE("stationary CSV and diagnostics serialization") {
    ModelParams p = bare_oscillator();
    const PhaseGrid g = build_phase_grid(p, 16, 16, 4.0);
    const StationaryState st = stationary_state(assemble_generator(p, g));
    std::ostringstream os;
    stationary_to_csv(st, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "u,w,P");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 16 * 16);

    const std::string json = diagnostics_json(st);
    CHECK(json.find("\"var_u\"") != std::string::npos);
    CHECK(json.find("\"boundary_mass\"") != std::string::npos);
}
