#pragma once

// Core signal type and the numeric primitives everything else builds on:
// power, SNR-calibrated mixing, rate conversion, and the symmetric padding
// needed before an undecimated wavelet transform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pliwave {

// A single-channel record. Amplitudes are in millivolts by convention;
// annotations are sample indices of R peaks (or other fiducial points).
struct Signal {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;
    std::vector<std::size_t> annotations;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

inline Signal make_signal(std::vector<double> samples, double sample_rate_hz) {
    Signal s;
    s.samples = std::move(samples);
    s.sample_rate_hz = sample_rate_hz;
    return s;
}

inline void validate_signal(const Signal& s, const char* who) {
    if (s.samples.empty())
        throw std::invalid_argument(std::string(who) + ": empty signal");
    if (!(s.sample_rate_hz > 0.0))
        throw std::invalid_argument(std::string(who) + ": sample rate must be positive");
    for (std::size_t i = 0; i < s.annotations.size(); ++i) {
        if (s.annotations[i] >= s.samples.size())
            throw std::invalid_argument(std::string(who) + ": annotation out of range");
        if (i > 0 && s.annotations[i] <= s.annotations[i - 1])
            throw std::invalid_argument(std::string(who) + ": annotations must be strictly increasing");
    }
}

// Signal-to-noise ratio in decibels, with an explicit representation for the
// noise-free case so callers never encode it as a magic finite number.
struct SnrDb {
    double db = 0.0;
    bool is_infinite = false;

    static SnrDb of(double value) { return SnrDb{value, false}; }
    static SnrDb infinite() { return SnrDb{0.0, true}; }
};

// Mean squared amplitude (biased; divides by N, not N-1).
inline double power(const Signal& s) {
    if (s.samples.empty())
        throw std::invalid_argument("power: empty signal");
    double acc = 0.0;
    for (double v : s.samples) acc += v * v;
    return acc / static_cast<double>(s.samples.size());
}

inline double power_over_range(const std::vector<double>& x, std::size_t begin, std::size_t end) {
    if (begin >= end || end > x.size())
        throw std::invalid_argument("power_over_range: bad range");
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
    return acc / static_cast<double>(end - begin);
}

struct MixResult {
    Signal noisy;
    Signal scaled_noise;
    double noise_gain = 0.0;
};

// Scales `noise` so that clean-vs-noise power ratio equals `snr` exactly,
// then adds it to `clean`. Powers are measured over [calib_begin, calib_end)
// so that scenarios with a silent lead-in can calibrate on the active part
// only; the default covers the whole record.
inline MixResult mix_at_snr(const Signal& clean, const Signal& noise, SnrDb snr,
                            std::size_t calib_begin = 0,
                            std::size_t calib_end = std::numeric_limits<std::size_t>::max()) {
    validate_signal(clean, "mix_at_snr(clean)");
    validate_signal(noise, "mix_at_snr(noise)");
    if (clean.samples.size() != noise.samples.size())
        throw std::invalid_argument("mix_at_snr: length mismatch");
    if (clean.sample_rate_hz != noise.sample_rate_hz)
        throw std::invalid_argument("mix_at_snr: sample rate mismatch");

    MixResult out;
    out.noisy = clean;
    out.scaled_noise = noise;
    if (snr.is_infinite) {
        std::fill(out.scaled_noise.samples.begin(), out.scaled_noise.samples.end(), 0.0);
        out.noise_gain = 0.0;
        return out;
    }

    if (calib_end == std::numeric_limits<std::size_t>::max()) calib_end = clean.samples.size();
    const double p_clean = power_over_range(clean.samples, calib_begin, calib_end);
    const double p_noise = power_over_range(noise.samples, calib_begin, calib_end);
    if (p_noise <= 0.0)
        throw std::invalid_argument("mix_at_snr: noise has zero power over calibration range");
    if (p_clean <= 0.0)
        throw std::invalid_argument("mix_at_snr: clean has zero power over calibration range");

    const double target_noise_power = p_clean / std::pow(10.0, snr.db / 10.0);
    out.noise_gain = std::sqrt(target_noise_power / p_noise);
    for (std::size_t i = 0; i < noise.samples.size(); ++i) {
        out.scaled_noise.samples[i] = out.noise_gain * noise.samples[i];
        out.noisy.samples[i] = clean.samples[i] + out.scaled_noise.samples[i];
    }
    return out;
}

namespace detail {

// Zeroth-order modified Bessel function of the first kind, by power series.
inline double bessel_i0(double x) {
    const double q = x * x / 4.0;
    double term = 1.0, acc = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        acc += term;
        if (term < acc * 1e-18) break;
    }
    return acc;
}

}  // namespace detail

// Windowed-sinc rate conversion. A 64-tap Kaiser-windowed lowpass kernel with
// cutoff at 0.45x the lower of the two rates is evaluated at the fractional
// source position of each output sample; taps are renormalized per output
// point so DC passes exactly. Linear interpolation is not an option here: its
// imaging error lands right in the interference band under study.
inline Signal resample(const Signal& in, double target_rate_hz) {
    validate_signal(in, "resample");
    if (!(target_rate_hz > 0.0))
        throw std::invalid_argument("resample: target rate must be positive");
    if (target_rate_hz == in.sample_rate_hz) return in;

    constexpr int kHalfTaps = 32;  // 64-tap kernel
    constexpr double kKaiserBeta = 10.0;
    const double src_rate = in.sample_rate_hz;
    const double cutoff_hz = 0.45 * std::min(src_rate, target_rate_hz);
    const double fc = cutoff_hz / src_rate;  // cycles per source sample
    const std::size_t n_in = in.samples.size();
    const std::size_t n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_in) * target_rate_hz / src_rate));

    const double i0_beta = detail::bessel_i0(kKaiserBeta);
    auto kernel = [&](double t) {
        // t in source-sample units, |t| <= kHalfTaps
        const double u = t / static_cast<double>(kHalfTaps);
        const double w = detail::bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
        const double a = 2.0 * fc * t;
        const double s = (a == 0.0) ? 1.0 : std::sin(std::numbers::pi * a) / (std::numbers::pi * a);
        return 2.0 * fc * s * w;
    };
    // Mirror extension for positions outside [0, n_in).
    auto sample_at = [&](long long idx) {
        const long long n = static_cast<long long>(n_in);
        long long m = idx % (2 * n);
        if (m < 0) m += 2 * n;
        if (m >= n) m = 2 * n - 1 - m;
        return in.samples[static_cast<std::size_t>(m)];
    };

    Signal out;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = static_cast<double>(i) * src_rate / target_rate_hz;
        const long long k0 = static_cast<long long>(std::floor(pos)) - kHalfTaps + 1;
        double acc = 0.0, norm = 0.0;
        for (long long k = k0; k < k0 + 2 * kHalfTaps; ++k) {
            const double h = kernel(pos - static_cast<double>(k));
            acc += h * sample_at(k);
            norm += h;
        }
        out.samples[i] = acc / norm;
    }
    out.annotations.reserve(in.annotations.size());
    for (std::size_t a : in.annotations) {
        const auto mapped = static_cast<std::size_t>(
            std::llround(static_cast<double>(a) * target_rate_hz / src_rate));
        out.annotations.push_back(std::min(mapped, n_out > 0 ? n_out - 1 : 0));
    }
    return out;
}

struct PaddedSignal {
    Signal signal;
    std::size_t original_length = 0;
};

// Extends the record to the next multiple of `multiple` by mirror reflection
// of its tail ([1 2 3 4 5] padded to a multiple of 4 -> [1 2 3 4 5 5 4 3]).
// Short inputs keep bouncing off both ends.
inline PaddedSignal pad_symmetric(const Signal& in, std::size_t multiple) {
    validate_signal(in, "pad_symmetric");
    if (multiple == 0)
        throw std::invalid_argument("pad_symmetric: multiple must be positive");
    const std::size_t n = in.samples.size();
    const std::size_t padded = ((n + multiple - 1) / multiple) * multiple;

    PaddedSignal out;
    out.original_length = n;
    out.signal = in;
    out.signal.samples.resize(padded);
    for (std::size_t i = n; i < padded; ++i) {
        std::size_t m = i % (2 * n);
        if (m >= n) m = 2 * n - 1 - m;
        out.signal.samples[i] = in.samples[m];
    }
    return out;
}

inline Signal trim(const Signal& in, std::size_t original_length) {
    if (original_length > in.samples.size())
        throw std::invalid_argument("trim: original length exceeds signal");
    Signal out = in;
    out.samples.resize(original_length);
    std::erase_if(out.annotations, [&](std::size_t a) { return a >= original_length; });
    return out;
}

}  // namespace pliwave
