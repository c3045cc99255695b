#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "omfp/equilibria.hpp"
#include "omfp/fokker_planck.hpp"
#include "omfp/model.hpp"
#include "omfp/spectrum_series.hpp"

// Stochastic-trajectory oracle for the same semiclassical dynamics:
// semi-implicit Euler-Maruyama integration of
//   du = w dt,  dw = [F_w(u) - Gamma_tot(u) w] dt + sqrt(D_tot(u) dt) dN
// (momentum updated first so the conservative limit has no secular energy
// drift), with per-trajectory counter-derived RNG streams for bit
// reproducibility under any parallel split.

namespace omfp {

struct TrajectoryConfig {
    double dt = 1e-3;
    long long steps = 1 << 20;       ///< recorded steps after burn-in (pre-stride)
    long long burn_in = 1 << 16;
    std::uint64_t seed = 1;
    int n_trajectories = 1;
    int stride = 1;                  ///< record every stride-th step
    bool allow_unstable = false;
    RateModel rate_model = RateModel::frozen_at_equilibrium;

    void validate() const {
        if (!(dt > 0.0) || dt > 0.01)
            throw std::invalid_argument("TrajectoryConfig: need 0 < dt <= 0.01");
        if (steps <= 0 || burn_in < 0 || n_trajectories < 1 || stride < 1)
            throw std::invalid_argument("TrajectoryConfig: bad counts");
    }
};

struct TrajectorySamples {
    std::vector<double> u, w;
    double sample_dt = 0.0; ///< dt * stride
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Small deterministic normal generator: splitmix64 stream + Box-Muller.
/// Self-contained so the byte stream is identical on every platform.
struct NormalStream {
    std::uint64_t state;
    double spare = 0.0;
    bool has_spare = false;

    explicit NormalStream(std::uint64_t seed) : state(seed) {}

    double uniform() {
        state = splitmix64(state);
        // 53 random bits, strictly inside (0, 1)
        return (double(state >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * pi * uniform();
        spare = r * std::sin(phi);
        has_spare = true;
        return r * std::cos(phi);
    }
};

} // namespace detail

/// Integrate the semiclassical Langevin dynamics. Starts every trajectory at
/// the first damped minimum (w = 0); refuses dynamically unstable parameter
/// sets unless allow_unstable is set. Fixed seed gives a bit-identical
/// sample stream.
inline TrajectorySamples simulate(const ModelParams& p, const TrajectoryConfig& cfg) {
    cfg.validate();
    const EquilibriumSet set = equilibrium_positions(p);
    const auto minima = set.stable_minima();
    if (minima.empty()) throw InstabilityError("simulate: no stable equilibrium");
    const auto damped = set.damped_minima();
    if (damped.empty() && !cfg.allow_unstable)
        throw InstabilityError("simulate: dynamically unstable (pass allow_unstable to force)");
    const Equilibrium start = damped.empty() ? minima.front() : damped.front();

    // divergence guard: an order-of-magnitude multiple of the thermal window
    double guard = 1e6;
    if (!damped.empty()) {
        const double t_ref = effective_temperature(p, start.u);
        guard = 60.0 * detail::local_thermal_width(start.u, t_ref, p);
    }

    const long long keep = cfg.steps / cfg.stride;
    TrajectorySamples out;
    out.sample_dt = cfg.dt * double(cfg.stride);
    out.u.reserve(std::size_t(keep) * std::size_t(cfg.n_trajectories));
    out.w.reserve(std::size_t(keep) * std::size_t(cfg.n_trajectories));

    const bool frozen = cfg.rate_model == RateModel::frozen_at_equilibrium;
    const double damping0 = total_damping(start.u, p);
    const double diffusion0 = total_diffusion(start.u, p);

    for (int traj = 0; traj < cfg.n_trajectories; ++traj) {
        detail::NormalStream rng(
            detail::splitmix64(cfg.seed ^ (0x7f4a7c15ull + 0x9e3779b9ull * std::uint64_t(traj))));
        double u = start.u, w = 0.0;
        for (long long step = 0; step < cfg.burn_in + cfg.steps; ++step) {
            const double diff = frozen ? diffusion0 : total_diffusion(u, p);
            const double damp = frozen ? damping0 : total_damping(u, p);
            w += cfg.dt * (momentum_drift(u, p) - damp * w);
            if (diff > 0.0) w += std::sqrt(diff * cfg.dt) * rng.normal();
            u += cfg.dt * w;
            if (std::fabs(u - start.u) > guard)
                throw DivergenceError("simulate: trajectory left the window guard");
            const long long rec = step - cfg.burn_in;
            if (rec >= 0 && rec % cfg.stride == 0) {
                out.u.push_back(u);
                out.w.push_back(w);
            }
        }
    }
    return out;
}

namespace detail {

/// In-place iterative radix-2 FFT (size must be a power of two).
inline void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * pi / double(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto even = a[i + k];
                const auto odd = a[i + k + len / 2] * w;
                a[i + k] = even + odd;
                a[i + k + len / 2] = even - odd;
                w *= wl;
            }
        }
    }
}

} // namespace detail

/// Welch-averaged periodogram of a sample series, scaled to the two-sided
/// spectral-density convention (so it is directly comparable with the
/// resolvent spectra). Hann window, half-overlapping segments.
inline SpectrumSeries periodogram(const std::vector<double>& samples, double dt,
                                  std::size_t segment = 1u << 14) {
    if (samples.size() < (1u << 16))
        throw InsufficientDataError("periodogram: need at least 2^16 samples");
    if (segment < 64 || (segment & (segment - 1)) != 0)
        throw std::invalid_argument("periodogram: segment must be a power of two >= 64");
    if (segment > samples.size()) segment = 1u << 14;

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= double(samples.size());

    std::vector<double> window(segment);
    double wsum2 = 0.0;
    for (std::size_t j = 0; j < segment; ++j) {
        window[j] = 0.5 * (1.0 - std::cos(2.0 * pi * double(j) / double(segment - 1)));
        wsum2 += window[j] * window[j];
    }

    std::vector<double> power(segment / 2, 0.0);
    std::vector<std::complex<double>> buf(segment);
    std::size_t n_segments = 0;
    for (std::size_t start = 0; start + segment <= samples.size(); start += segment / 2) {
        for (std::size_t j = 0; j < segment; ++j)
            buf[j] = (samples[start + j] - mean) * window[j];
        detail::fft_pow2(buf);
        for (std::size_t k = 0; k < segment / 2; ++k) power[k] += std::norm(buf[k]);
        ++n_segments;
    }

    SpectrumSeries out;
    out.omegas.resize(segment / 2 - 1);
    out.values.resize(segment / 2 - 1);
    const double scale = dt / (wsum2 * double(n_segments));
    for (std::size_t k = 1; k < segment / 2; ++k) {
        out.omegas[k - 1] = 2.0 * pi * double(k) / (double(segment) * dt);
        out.values[k - 1] = power[k] * scale;
    }
    out.validate();
    return out;
}

struct Histogram {
    std::vector<double> centers;
    std::vector<std::size_t> counts;
    std::vector<double> density;
};

inline Histogram histogram(const std::vector<double>& samples, std::size_t n_bins,
                           double lo, double hi) {
    Histogram h;
    h.centers.resize(n_bins);
    h.counts.assign(n_bins, 0);
    h.density.assign(n_bins, 0.0);
    const double dx = (hi - lo) / double(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) h.centers[b] = lo + (double(b) + 0.5) * dx;
    for (double v : samples) {
        if (v < lo || v >= hi) continue;
        ++h.counts[std::size_t((v - lo) / dx)];
    }
    const double norm = 1.0 / (double(samples.size()) * dx);
    for (std::size_t b = 0; b < n_bins; ++b) h.density[b] = double(h.counts[b]) * norm;
    return h;
}

/// KS distance between samples and the piecewise-linear CDF of a grid
/// marginal (density values on cell centers).
inline double ks_distance_to_marginal(std::vector<double> samples, const PhaseGrid& grid,
                                      const std::vector<double>& marginal_u) {
    std::sort(samples.begin(), samples.end());
    // CDF at cell edges
    std::vector<double> edges(std::size_t(grid.nx) + 1), cdf(std::size_t(grid.nx) + 1, 0.0);
    for (int i = 0; i <= grid.nx; ++i) edges[std::size_t(i)] = grid.u_min + grid.h_u * i;
    for (int i = 0; i < grid.nx; ++i)
        cdf[std::size_t(i) + 1] = cdf[std::size_t(i)] + marginal_u[std::size_t(i)] * grid.h_u;
    for (auto& c : cdf) c /= cdf.back();
    auto ref = [&](double x) {
        if (x <= edges.front()) return 0.0;
        if (x >= edges.back()) return 1.0;
        const std::size_t i = std::size_t((x - grid.u_min) / grid.h_u);
        const double t = (x - edges[i]) / grid.h_u;
        return cdf[i] + t * (cdf[i + 1] - cdf[i]);
    };
    const double n = double(samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = ref(samples[i]);
        worst = std::max(worst, std::fabs(c - double(i) / n));
        worst = std::max(worst, std::fabs(c - double(i + 1) / n));
    }
    return worst;
}

// Binary trajectory dump: 8-byte magic "OMFPTRJ1", u32 version, f64 dt,
// u64 stride, u64 count, then count little-endian (u, w) double pairs.
static_assert(std::endian::native == std::endian::little,
              "trajectory dump assumes a little-endian host");

inline void write_trajectory_dump(const std::string& path, const TrajectorySamples& samples,
                                  double base_dt, std::uint64_t stride) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_trajectory_dump: cannot open " + path);
    const char magic[8] = {'O', 'M', 'F', 'P', 'T', 'R', 'J', '1'};
    const std::uint32_t version = 1;
    const std::uint64_t count = samples.u.size();
    os.write(magic, 8);
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    os.write(reinterpret_cast<const char*>(&base_dt), sizeof base_dt);
    os.write(reinterpret_cast<const char*>(&stride), sizeof stride);
    os.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (std::uint64_t i = 0; i < count; ++i) {
        os.write(reinterpret_cast<const char*>(&samples.u[i]), sizeof(double));
        os.write(reinterpret_cast<const char*>(&samples.w[i]), sizeof(double));
    }
}

struct TrajectoryDump {
    std::uint32_t version = 0;
    double dt = 0.0;
    std::uint64_t stride = 0;
    TrajectorySamples samples;
};

inline TrajectoryDump read_trajectory_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_trajectory_dump: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "OMFPTRJ1")
        throw std::runtime_error("read_trajectory_dump: bad magic");
    TrajectoryDump d;
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&d.version), sizeof d.version);
    is.read(reinterpret_cast<char*>(&d.dt), sizeof d.dt);
    is.read(reinterpret_cast<char*>(&d.stride), sizeof d.stride);
    is.read(reinterpret_cast<char*>(&count), sizeof count);
    d.samples.u.resize(count);
    d.samples.w.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(&d.samples.u[i]), sizeof(double));
        is.read(reinterpret_cast<char*>(&d.samples.w[i]), sizeof(double));
    }
    if (!is) throw std::runtime_error("read_trajectory_dump: truncated file");
    d.samples.sample_dt = d.dt * double(d.stride);
    return d;
}

} // namespace omfp
