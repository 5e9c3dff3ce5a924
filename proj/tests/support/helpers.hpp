#pragma once

// Spectral measurement helpers used across the suites. These are written
// against textbook definitions (Goertzel recurrence, least-squares sinusoid
// fit) independent of anything in the library so they can serve as oracles.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "pliwave/signal.hpp"

namespace testsupport {

inline std::vector<double> make_tone(std::size_t n, double fs, double hz, double amp = 1.0,
                                     double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / fs + phase);
    return x;
}

inline double rms(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Goertzel recurrence evaluating one DTFT sample; returns mean power of the
// component at `hz` (amplitude^2 / 2 for a full-scale sinusoid bin-aligned
// or not, up to leakage).
inline double goertzel_power(std::span<const double> x, double fs, double hz) {
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("goertzel_power: empty input");
    const double w = 2.0 * std::numbers::pi * hz / fs;
    const double coeff = 2.0 * std::cos(w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s0 = x[i] + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    const double re = s1 - s2 * std::cos(w);
    const double im = s2 * std::sin(w);
    // |DTFT|^2 scaled to the mean power of that single complex exponential
    // pair: (2/N)^2 * |X|^2 / 2.
    const double mag2 = re * re + im * im;
    return 2.0 * mag2 / (static_cast<double>(n) * static_cast<double>(n));
}

// Sum of periodogram power over DFT bins within [hz - half_width, hz + half_width].
inline double band_power(std::span<const double> x, double fs, double hz, double half_width) {
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("band_power: empty input");
    const double df = fs / static_cast<double>(n);
    const auto k_lo = static_cast<long long>(std::ceil((hz - half_width) / df));
    const auto k_hi = static_cast<long long>(std::floor((hz + half_width) / df));
    double total = 0.0;
    for (long long k = std::max(1LL, k_lo); k <= k_hi && k < static_cast<long long>(n / 2); ++k)
        total += goertzel_power(x, fs, static_cast<double>(k) * df);
    return total;
}

// Location of the strongest DFT bin in [lo_hz, hi_hz], refined by parabolic
// interpolation over the log power of the neighboring bins.
inline double dominant_frequency(std::span<const double> x, double fs, double lo_hz, double hi_hz) {
    const std::size_t n = x.size();
    const double df = fs / static_cast<double>(n);
    long long best_k = -1;
    double best_p = -1.0;
    for (long long k = std::max(1LL, static_cast<long long>(std::ceil(lo_hz / df)));
         k <= static_cast<long long>(std::floor(hi_hz / df)) && k < static_cast<long long>(n / 2); ++k) {
        const double p = goertzel_power(x, fs, static_cast<double>(k) * df);
        if (p > best_p) {
            best_p = p;
            best_k = k;
        }
    }
    if (best_k < 0) throw std::invalid_argument("dominant_frequency: empty band");
    const double pm = goertzel_power(x, fs, static_cast<double>(best_k - 1) * df);
    const double pp = goertzel_power(x, fs, static_cast<double>(best_k + 1) * df);
    const double lm = std::log(std::max(pm, 1e-300));
    const double l0 = std::log(std::max(best_p, 1e-300));
    const double lp = std::log(std::max(pp, 1e-300));
    const double denom = lm - 2.0 * l0 + lp;
    const double delta = std::abs(denom) > 1e-12 ? 0.5 * (lm - lp) / denom : 0.0;
    return (static_cast<double>(best_k) + std::clamp(delta, -0.5, 0.5)) * df;
}

// Least-squares amplitude of a sinusoid at a known frequency.
inline double sine_fit_amplitude(std::span<const double> x, double fs, double hz) {
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("sine_fit_amplitude: empty input");
    double ss = 0.0, sc = 0.0, scs = 0.0, s2 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = 2.0 * std::numbers::pi * hz * static_cast<double>(i) / fs;
        const double s = std::sin(ph), c = std::cos(ph);
        ss += x[i] * s;
        sc += x[i] * c;
        scs += s * c;
        s2 += s * s;
        c2 += c * c;
    }
    // Solve the 2x2 normal equations for x ~ a sin + b cos.
    const double det = s2 * c2 - scs * scs;
    if (std::abs(det) < 1e-12) throw std::invalid_argument("sine_fit_amplitude: singular fit");
    const double a = (ss * c2 - sc * scs) / det;
    const double b = (sc * s2 - ss * scs) / det;
    return std::sqrt(a * a + b * b);
}

inline pliwave::Signal as_signal(std::vector<double> samples, double fs) {
    return pliwave::make_signal(std::move(samples), fs);
}

}  // namespace testsupport
