#pragma once

// Stationary (undecimated, a trous) wavelet transform.
//
// No decimation: every scale keeps full length, which keeps the transform
// shift-equivariant and lets per-sample thresholds line up with the input.
// Level j uses the base filters with taps spaced 2^(j-1) apart and circular
// indexing; inputs must be padded to a multiple of 2^levels first (see
// pad_symmetric). Reconstruction inverts one level as the average of the
// lowpass and highpass back-projections:
//   x[n] = 1/2 * sum_k ( h[k] a[n - d k] + g[k] d[n - d k] )   (mod N)
// which is exact for any orthogonal pair because |H(w)|^2 + |G(w)|^2 = 2.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pliwave/signal.hpp"
#include "pliwave/wavelet.hpp"

namespace pliwave {

struct SwtDecomposition {
    // details[j-1] holds scale j; scale `levels` is the coarsest detail.
    std::vector<std::vector<double>> details;
    std::vector<double> approximation;
    int levels = 0;
    double sample_rate_hz = 0.0;
};

inline constexpr int kMinSwtLevels = 1;
inline constexpr int kMaxSwtLevels = 8;

// Nominal band of a coefficient sequence: scale j in [1, levels] covers
// (fs/2^(j+1), fs/2^j); scale 0 addresses the approximation, (0, fs/2^(levels+1)).
inline std::pair<double, double> band_of_scale(int scale, double sample_rate_hz, int levels) {
    if (levels < kMinSwtLevels || levels > kMaxSwtLevels)
        throw std::invalid_argument("band_of_scale: levels out of range");
    if (scale < 0 || scale > levels)
        throw std::invalid_argument("band_of_scale: scale out of range");
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("band_of_scale: sample rate must be positive");
    if (scale == 0)
        return {0.0, sample_rate_hz / static_cast<double>(1 << (levels + 1))};
    return {sample_rate_hz / static_cast<double>(1 << (scale + 1)),
            sample_rate_hz / static_cast<double>(1 << scale)};
}

namespace detail {

// y[n] += c * x[(n + offset) mod N], with the wrap hoisted out of the loop.
inline void accumulate_circular(std::vector<double>& y, const std::vector<double>& x,
                                std::size_t offset, double c) {
    const std::size_t n = x.size();
    offset %= n;
    const std::size_t head = n - offset;
    for (std::size_t i = 0; i < head; ++i) y[i] += c * x[i + offset];
    for (std::size_t i = head; i < n; ++i) y[i] += c * x[i + offset - n];
}

}  // namespace detail

inline SwtDecomposition swt_decompose(const Signal& in, const WaveletFilters& w, int levels) {
    validate_signal(in, "swt_decompose");
    if (levels < kMinSwtLevels || levels > kMaxSwtLevels)
        throw std::invalid_argument("swt_decompose: levels must be in [" +
                                    std::to_string(kMinSwtLevels) + ", " +
                                    std::to_string(kMaxSwtLevels) + "]");
    const std::size_t n = in.samples.size();
    const std::size_t multiple = static_cast<std::size_t>(1) << levels;
    if (n % multiple != 0)
        throw std::invalid_argument(
            "swt_decompose: signal length " + std::to_string(n) + " is not a multiple of 2^levels = " +
            std::to_string(multiple) + "; apply pad_symmetric first");

    SwtDecomposition out;
    out.levels = levels;
    out.sample_rate_hz = in.sample_rate_hz;
    out.details.reserve(static_cast<std::size_t>(levels));

    std::vector<double> approx = in.samples;
    std::vector<double> next(n), det(n);
    for (int j = 1; j <= levels; ++j) {
        const std::size_t dilation = static_cast<std::size_t>(1) << (j - 1);
        std::fill(next.begin(), next.end(), 0.0);
        std::fill(det.begin(), det.end(), 0.0);
        for (std::size_t k = 0; k < w.length(); ++k) {
            const std::size_t offset = k * dilation;
            detail::accumulate_circular(next, approx, offset, w.dec_lo[k]);
            detail::accumulate_circular(det, approx, offset, w.dec_hi[k]);
        }
        out.details.push_back(det);
        approx.swap(next);
    }
    out.approximation = std::move(approx);
    return out;
}

inline Signal swt_reconstruct(const SwtDecomposition& dec, const WaveletFilters& w) {
    if (dec.levels < kMinSwtLevels || dec.levels > kMaxSwtLevels)
        throw std::invalid_argument("swt_reconstruct: levels out of range");
    if (dec.details.size() != static_cast<std::size_t>(dec.levels))
        throw std::invalid_argument("swt_reconstruct: detail scale count does not match levels");
    const std::size_t n = dec.approximation.size();
    if (n == 0) throw std::invalid_argument("swt_reconstruct: empty approximation");
    for (const auto& d : dec.details)
        if (d.size() != n)
            throw std::invalid_argument("swt_reconstruct: coefficient length mismatch");

    std::vector<double> approx = dec.approximation;
    std::vector<double> next(n);
    for (int j = dec.levels; j >= 1; --j) {
        const std::size_t dilation = static_cast<std::size_t>(1) << (j - 1);
        const auto& det = dec.details[static_cast<std::size_t>(j - 1)];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t k = 0; k < w.length(); ++k) {
            // n - d k mod N == n + (N - d k mod N) mod N
            const std::size_t back = (n - (k * dilation) % n) % n;
            detail::accumulate_circular(next, approx, back, 0.5 * w.rec_lo[k]);
            detail::accumulate_circular(next, det, back, 0.5 * w.rec_hi[k]);
        }
        approx.swap(next);
    }

    Signal out;
    out.samples = std::move(approx);
    out.sample_rate_hz = dec.sample_rate_hz;
    return out;
}

}  // namespace pliwave
