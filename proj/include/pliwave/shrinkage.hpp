#pragma once

// Coefficient shrinkage: the per-sample moving-median threshold track with a
// hybrid hard/soft rule, plus the classical scalar-threshold rules used as
// baselines (hard, soft, hyperbolic with the minimax threshold).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace pliwave {

struct ThresholdTrack {
    std::vector<double> values;
};

namespace detail {

// Order-statistic sliding window: two balanced multisets, lo holding the
// lower half (its max is the median for odd counts). Insert/erase are
// O(log W), so a full track costs O(N log W).
class SlidingMedian {
  public:
    void insert(double v) {
        if (lo_.empty() || v <= *lo_.rbegin()) lo_.insert(v); else hi_.insert(v);
        rebalance();
    }

    void erase(double v) {
        if (!lo_.empty() && v <= *lo_.rbegin()) {
            auto it = lo_.find(v);
            if (it == lo_.end()) throw std::logic_error("SlidingMedian: erase of absent value");
            lo_.erase(it);
        } else {
            auto it = hi_.find(v);
            if (it == hi_.end()) throw std::logic_error("SlidingMedian: erase of absent value");
            hi_.erase(it);
        }
        rebalance();
    }

    double median() const {
        const std::size_t n = lo_.size() + hi_.size();
        if (n == 0) throw std::logic_error("SlidingMedian: empty window");
        if (n % 2 == 1) return *lo_.rbegin();
        return 0.5 * (*lo_.rbegin() + *hi_.begin());
    }

  private:
    void rebalance() {
        // Invariant: lo holds ceil(n/2) elements.
        while (lo_.size() > hi_.size() + 1) {
            auto it = std::prev(lo_.end());
            hi_.insert(*it);
            lo_.erase(it);
        }
        while (lo_.size() < hi_.size()) {
            auto it = hi_.begin();
            lo_.insert(*it);
            hi_.erase(it);
        }
    }

    std::multiset<double> lo_, hi_;
};

}  // namespace detail

// Per-sample threshold: median of |detail| over a centered window of
// window_ms (forced to an odd sample count; windows shrink symmetrically at
// the record edges). The median tracks the interference envelope level while
// staying insensitive to short high-amplitude bursts such as QRS complexes.
inline ThresholdTrack moving_median_threshold(std::span<const double> detail_coeffs,
                                              double window_ms, double sample_rate_hz) {
    if (detail_coeffs.empty())
        throw std::invalid_argument("moving_median_threshold: empty coefficient sequence");
    if (!(window_ms > 0.0) || !(sample_rate_hz > 0.0))
        throw std::invalid_argument("moving_median_threshold: window and rate must be positive");
    std::size_t window = static_cast<std::size_t>(std::llround(window_ms * sample_rate_hz / 1000.0));
    if (window < 1) window = 1;
    if (window % 2 == 0) ++window;
    const std::size_t n = detail_coeffs.size();
    if (window > n)
        throw std::invalid_argument("moving_median_threshold: window exceeds sequence length");

    const std::size_t half = window / 2;
    ThresholdTrack track;
    track.values.resize(n);

    detail::SlidingMedian med;
    // Prime with the window of sample 0: indices [0, half].
    for (std::size_t i = 0; i <= half && i < n; ++i) med.insert(std::abs(detail_coeffs[i]));
    track.values[0] = med.median();
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t incoming = i + half;
        if (incoming < n) med.insert(std::abs(detail_coeffs[incoming]));
        if (i > half) med.erase(std::abs(detail_coeffs[i - half - 1]));
        track.values[i] = med.median();
    }
    return track;
}

// Hybrid rule: kill sub-threshold coefficients, soft-shrink the band up to
// gate_factor * lambda, and pass anything beyond untouched (QRS protection).
// Boundary conventions: |w| == lambda maps to zero; |w| == gate_factor*lambda
// stays in the soft branch. Odd in w and jointly homogeneous in (w, lambda).
inline double hybrid_shrink(double w, double lambda, double gate_factor = 1.5) {
    if (lambda < 0.0) throw std::invalid_argument("hybrid_shrink: negative threshold");
    if (!(gate_factor > 1.0)) throw std::invalid_argument("hybrid_shrink: gate factor must exceed 1");
    const double a = std::abs(w);
    if (a <= lambda) return 0.0;
    if (a <= gate_factor * lambda) return w > 0.0 ? a - lambda : lambda - a;
    return w;
}

inline double hard_shrink(double w, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("hard_shrink: negative threshold");
    return std::abs(w) > lambda ? w : 0.0;
}

inline double soft_shrink(double w, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("soft_shrink: negative threshold");
    const double a = std::abs(w) - lambda;
    if (a <= 0.0) return 0.0;
    return w > 0.0 ? a : -a;
}

inline double hyperbolic_shrink(double w, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("hyperbolic_shrink: negative threshold");
    const double a = std::abs(w);
    if (a <= lambda) return 0.0;
    const double m = std::sqrt(a * a - lambda * lambda);
    return w > 0.0 ? m : -m;
}

// Scalar minimax threshold: sigma * (0.3936 + 0.1829 log2 N) for N > 32,
// zero otherwise, with sigma estimated as median(|detail|) / 0.6745.
inline double minimax_threshold(std::span<const double> detail_coeffs) {
    if (detail_coeffs.empty())
        throw std::invalid_argument("minimax_threshold: empty coefficient sequence");
    const std::size_t n = detail_coeffs.size();
    if (n <= 32) return 0.0;
    std::vector<double> mags(detail_coeffs.size());
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(detail_coeffs[i]);
    const std::size_t mid = n / 2;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
    double median = mags[mid];
    if (n % 2 == 0) {
        const double below = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + below);
    }
    const double sigma = median / 0.6745;
    return sigma * (0.3936 + 0.1829 * std::log2(static_cast<double>(n)));
}

// Diagnostic mask of samples the hybrid rule would pass untouched.
inline std::vector<bool> qrs_gate(std::span<const double> detail_coeffs,
                                  const ThresholdTrack& track, double gate_factor = 1.5) {
    if (detail_coeffs.size() != track.values.size())
        throw std::invalid_argument("qrs_gate: track length mismatch");
    if (!(gate_factor > 1.0)) throw std::invalid_argument("qrs_gate: gate factor must exceed 1");
    std::vector<bool> mask(detail_coeffs.size());
    for (std::size_t i = 0; i < detail_coeffs.size(); ++i)
        mask[i] = std::abs(detail_coeffs[i]) > gate_factor * track.values[i];
    return mask;
}

}  // namespace pliwave
