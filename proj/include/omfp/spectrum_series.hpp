#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace omfp {

/// Sampled spectral density S(omega). The coherent delta-peak weight of the
/// emission spectrum is carried as a separate scalar, never binned into the
/// samples.
struct SpectrumSeries {
    std::vector<double> omegas;
    std::vector<double> values;
    std::optional<double> coherent_weight;
    std::vector<std::size_t> failed; ///< indices where the per-frequency solve failed

    void validate() const {
        if (omegas.size() != values.size())
            throw std::invalid_argument("SpectrumSeries: size mismatch");
        for (std::size_t i = 1; i < omegas.size(); ++i)
            if (!(omegas[i] > omegas[i - 1]))
                throw std::invalid_argument("SpectrumSeries: omegas must be strictly increasing");
    }
};

/// Log-spaced frequency grid, endpoints included.
inline std::vector<double> log_frequency_grid(double omega_min, double omega_max, std::size_t n) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min) || n < 2)
        throw std::invalid_argument("log_frequency_grid: bad range");
    std::vector<double> w(n);
    const double l0 = std::log(omega_min), l1 = std::log(omega_max);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = std::exp(l0 + (l1 - l0) * double(i) / double(n - 1));
    w.front() = omega_min;
    w.back() = omega_max;
    return w;
}

inline std::vector<double> linear_frequency_grid(double omega_min, double omega_max, std::size_t n) {
    if (!(omega_max > omega_min) || n < 2)
        throw std::invalid_argument("linear_frequency_grid: bad range");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = omega_min + (omega_max - omega_min) * double(i) / double(n - 1);
    return w;
}

/// Index of the largest sample.
inline std::size_t peak_index(const SpectrumSeries& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.values.size(); ++i)
        if (s.values[i] > s.values[best]) best = i;
    return best;
}

/// Peak position refined by a parabola through the three samples around the
/// maximum (in linear omega).
inline double peak_frequency(const SpectrumSeries& s) {
    const std::size_t k = peak_index(s);
    if (k == 0 || k + 1 >= s.omegas.size()) return s.omegas[k];
    const double x0 = s.omegas[k - 1], x1 = s.omegas[k], x2 = s.omegas[k + 1];
    const double y0 = s.values[k - 1], y1 = s.values[k], y2 = s.values[k + 1];
    const double d0 = (y1 - y0) / (x1 - x0), d1 = (y2 - y1) / (x2 - x1);
    const double c2 = (d1 - d0) / (x2 - x0); // second divided difference
    if (!(c2 < 0.0)) return x1;
    return 0.5 * (x0 + x1) - 0.5 * d0 / c2;
}

/// Full width at half maximum around the global peak, linear interpolation
/// of the half-level crossings.
inline double fwhm(const SpectrumSeries& s) {
    const std::size_t k = peak_index(s);
    const double half = 0.5 * s.values[k];
    double left = s.omegas.front(), right = s.omegas.back();
    for (std::size_t i = k; i-- > 0;) {
        if (s.values[i] < half) {
            const double t = (half - s.values[i]) / (s.values[i + 1] - s.values[i]);
            left = s.omegas[i] + t * (s.omegas[i + 1] - s.omegas[i]);
            break;
        }
    }
    for (std::size_t i = k + 1; i < s.values.size(); ++i) {
        if (s.values[i] < half) {
            const double t = (s.values[i - 1] - half) / (s.values[i - 1] - s.values[i]);
            right = s.omegas[i - 1] + t * (s.omegas[i] - s.omegas[i - 1]);
            break;
        }
    }
    return right - left;
}

/// Trapezoid integral of the sampled series.
inline double integrate_series(const SpectrumSeries& s) {
    double acc = 0.0;
    for (std::size_t i = 1; i < s.omegas.size(); ++i)
        acc += 0.5 * (s.values[i] + s.values[i - 1]) * (s.omegas[i] - s.omegas[i - 1]);
    return acc;
}

} // namespace omfp
