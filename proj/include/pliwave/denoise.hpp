#pragma once

// End-to-end denoising pipelines.
//
// Wavelet methods: pad to a transform-aligned length, decompose, shrink the
// detail scales, reconstruct, trim. The approximation band is never touched:
// it carries the atrial activity the whole exercise is trying to preserve.
//
// The envelope-riding method thresholds each detail sample against a moving
// median of coefficient magnitudes scaled by sqrt(2). The median of a
// sinusoid's magnitude is sin(pi/4) = 1/sqrt(2) of its envelope, so the
// scaled track hugs the local interference envelope: steady interference
// falls entirely below threshold and is removed outright, while bursts above
// gate_factor * threshold (QRS complexes) pass unmodified.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pliwave/notch.hpp"
#include "pliwave/shrinkage.hpp"
#include "pliwave/signal.hpp"
#include "pliwave/swt.hpp"
#include "pliwave/wavelet.hpp"

namespace pliwave {

enum class Method {
    proposed_hybrid,
    hard_minimax,
    soft_minimax,
    hyperbolic_minimax,
    notch_fixed,
    notch_adaptive,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::proposed_hybrid: return "proposed-hybrid";
        case Method::hard_minimax: return "hard-minimax";
        case Method::soft_minimax: return "soft-minimax";
        case Method::hyperbolic_minimax: return "hyperbolic-minimax";
        case Method::notch_fixed: return "notch-fixed";
        case Method::notch_adaptive: return "notch-adaptive";
    }
    throw std::logic_error("method_name: bad enum");
}

inline Method parse_method(const std::string& name) {
    for (Method m : {Method::proposed_hybrid, Method::hard_minimax, Method::soft_minimax,
                     Method::hyperbolic_minimax, Method::notch_fixed, Method::notch_adaptive})
        if (name == method_name(m)) return m;
    throw std::invalid_argument(
        "unknown method '" + name +
        "' (expected proposed-hybrid, hard-minimax, soft-minimax, hyperbolic-minimax, "
        "notch-fixed or notch-adaptive)");
}

inline bool is_wavelet_method(Method m) {
    return m == Method::proposed_hybrid || m == Method::hard_minimax ||
           m == Method::soft_minimax || m == Method::hyperbolic_minimax;
}

// Decomposition depth for a given rate: deepest detail scale should contain
// the 50 Hz fundamental, i.e. fs/2^(levels+1) < 50 <= fs/2^levels. At the
// native 1000 Hz this gives 4 levels (band 31.25-62.5 Hz).
inline int levels_for_rate(double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("levels_for_rate: rate must be positive");
    const int levels = static_cast<int>(std::llround(std::log2(sample_rate_hz / 62.5)));
    return std::clamp(levels, 3, 6);
}

struct DenoiserSpec {
    Method method = Method::proposed_hybrid;
    std::string wavelet = "db6";
    int levels = 0;                    // 0: derive from the sample rate
    double window_ms = 200.0;          // moving-median window (envelope method)
    double qrs_gate_factor = 1.5;      // hard-pass gate in units of the threshold
    // Median-to-envelope conversions. A single sinusoid has median |w| equal
    // to sin(pi/4) of its envelope, so sqrt 2 recovers the envelope of one
    // clean tone. The deepest detail scale carries one interference
    // component, but its amplitude drifts and the median window straddles
    // QRS energy, so the default adds headroom beyond sqrt 2. Shallower
    // scales mix two harmonics with band-edge spillover and interharmonic
    // sidebands; two equal tones alone push the envelope to 2 sqrt 2 times
    // the median, and the worst measured peak-to-local-median ratio for the
    // mains model's stationary scenarios is just under 5.
    double threshold_scale = 2.0;
    double mixture_threshold_scale = 5.0;

    // Settings for the notch reference methods.
    double notch_center_hz = 50.0;
    double notch_half_bandwidth_hz = 1.0;
    double adaptive_step_size = 0.01;
    int adaptive_harmonics = 5;       // 1 disables the harmonic replicas

    void validate() const {
        load_wavelet(wavelet);  // throws with the list of known families
        if (!(window_ms > 0.0)) throw std::invalid_argument("DenoiserSpec: window_ms must be positive");
        if (!(qrs_gate_factor > 1.0))
            throw std::invalid_argument("DenoiserSpec: qrs_gate_factor must exceed 1");
        if (!(threshold_scale > 0.0))
            throw std::invalid_argument("DenoiserSpec: threshold_scale must be positive");
        if (!(mixture_threshold_scale > 0.0))
            throw std::invalid_argument("DenoiserSpec: mixture_threshold_scale must be positive");
        if (levels != 0 && (levels < kMinSwtLevels || levels > kMaxSwtLevels))
            throw std::invalid_argument("DenoiserSpec: levels out of range");
    }
};

// Applies the configured shrinkage to every detail scale in place. The
// approximation vector is moved through untouched.
inline SwtDecomposition shrink_details(SwtDecomposition dec, const DenoiserSpec& spec) {
    spec.validate();
    if (!is_wavelet_method(spec.method))
        throw std::invalid_argument("shrink_details: not a wavelet-domain method");
    for (std::size_t s = 0; s < dec.details.size(); ++s) {
        auto& scale = dec.details[s];
        if (spec.method == Method::proposed_hybrid) {
            const bool deepest = s + 1 == dec.details.size();
            const double factor = deepest ? spec.threshold_scale : spec.mixture_threshold_scale;
            const ThresholdTrack track =
                moving_median_threshold(scale, spec.window_ms, dec.sample_rate_hz);
            for (std::size_t i = 0; i < scale.size(); ++i)
                scale[i] = hybrid_shrink(scale[i], factor * track.values[i],
                                         spec.qrs_gate_factor);
        } else {
            const double lambda = minimax_threshold(scale);
            for (auto& v : scale) {
                switch (spec.method) {
                    case Method::hard_minimax: v = hard_shrink(v, lambda); break;
                    case Method::soft_minimax: v = soft_shrink(v, lambda); break;
                    case Method::hyperbolic_minimax: v = hyperbolic_shrink(v, lambda); break;
                    default: break;
                }
            }
        }
    }
    return dec;
}

// Wavelet-domain denoising. Output has the input's length, rate and
// annotations. Notch methods are dispatched by apply_method instead.
inline Signal denoise(const Signal& in, const DenoiserSpec& spec) {
    validate_signal(in, "denoise");
    spec.validate();
    if (!is_wavelet_method(spec.method))
        throw std::invalid_argument(std::string("denoise: method '") + method_name(spec.method) +
                                    "' is not a wavelet-domain method; use apply_method");
    const int levels = spec.levels != 0 ? spec.levels : levels_for_rate(in.sample_rate_hz);
    const WaveletFilters wavelet = load_wavelet(spec.wavelet);

    const PaddedSignal padded = pad_symmetric(in, static_cast<std::size_t>(1) << levels);
    SwtDecomposition dec = swt_decompose(padded.signal, wavelet, levels);
    dec = shrink_details(std::move(dec), spec);
    Signal restored = swt_reconstruct(dec, wavelet);
    restored.annotations = padded.signal.annotations;
    Signal out = trim(restored, padded.original_length);
    out.annotations = in.annotations;
    return out;
}

// Uniform entry point for every method id, wavelet or notch.
inline Signal apply_method(const Signal& in, const DenoiserSpec& spec) {
    spec.validate();
    if (is_wavelet_method(spec.method)) return denoise(in, spec);
    if (spec.method == Method::notch_fixed) {
        const BiquadCascade cascade = design_butterworth_bandstop(
            spec.notch_center_hz, spec.notch_half_bandwidth_hz, in.sample_rate_hz);
        return filter_signal(cascade, in);
    }
    AdaptiveNotchConfig cfg;
    cfg.step_size = spec.adaptive_step_size;
    cfg.fundamental_hz = spec.notch_center_hz;
    cfg.harmonic_count = spec.adaptive_harmonics;
    return adaptive_notch(in, cfg);
}

}  // namespace pliwave
