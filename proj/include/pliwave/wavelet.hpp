#pragma once

// Wavelet filter construction from the embedded coefficient table.
//
// Only the scaling (lowpass) filter is stored; the highpass and synthesis
// filters follow from the quadrature-mirror relation for orthogonal banks:
//   g[k] = (-1)^k h[L-1-k],   reconstruction filters equal the analysis ones.

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pliwave/wavelet_table.hpp"

namespace pliwave {

struct WaveletFilters {
    std::string name;
    std::vector<double> dec_lo;
    std::vector<double> dec_hi;
    std::vector<double> rec_lo;
    std::vector<double> rec_hi;

    std::size_t length() const { return dec_lo.size(); }
};

namespace detail {

inline constexpr double kFilterTol = 1e-10;

inline void validate_scaling_filter(const std::string& name, const std::vector<double>& h) {
    if (h.size() < 2 || h.size() % 2 != 0)
        throw std::invalid_argument("wavelet '" + name + "': filter length must be even and >= 2");
    const double sum = std::accumulate(h.begin(), h.end(), 0.0);
    if (std::abs(sum - std::sqrt(2.0)) > kFilterTol)
        throw std::invalid_argument("wavelet '" + name + "': taps must sum to sqrt(2)");
    // Orthonormality of even shifts; m = 0 covers the unit-energy condition.
    for (std::size_t m = 0; 2 * m < h.size(); ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 2 * m < h.size(); ++k) acc += h[k] * h[k + 2 * m];
        const double target = (m == 0) ? 1.0 : 0.0;
        if (std::abs(acc - target) > kFilterTol)
            throw std::invalid_argument("wavelet '" + name + "': taps are not orthonormal");
    }
}

}  // namespace detail

inline WaveletFilters make_wavelet_from_scaling(const std::string& name, std::vector<double> h) {
    detail::validate_scaling_filter(name, h);
    WaveletFilters w;
    w.name = name;
    w.dec_lo = std::move(h);
    const std::size_t L = w.dec_lo.size();
    w.dec_hi.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        w.dec_hi[k] = sign * w.dec_lo[L - 1 - k];
    }
    w.rec_lo = w.dec_lo;
    w.rec_hi = w.dec_hi;
    return w;
}

inline std::vector<std::string> parse_wavelet_names(std::string_view table = kWaveletTable) {
    std::vector<std::string> names;
    std::istringstream in{std::string(table)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string name;
        fields >> name;
        if (!name.empty()) names.push_back(name);
    }
    return names;
}

inline WaveletFilters load_wavelet(const std::string& name, std::string_view table = kWaveletTable) {
    std::istringstream in{std::string(table)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string entry;
        fields >> entry;
        if (entry != name) continue;
        std::vector<double> taps;
        double v;
        while (fields >> v) taps.push_back(v);
        return make_wavelet_from_scaling(name, std::move(taps));
    }
    std::string known;
    for (const auto& n : parse_wavelet_names(table)) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw std::invalid_argument("unknown wavelet '" + name + "' (available: " + known + ")");
}

}  // namespace pliwave
