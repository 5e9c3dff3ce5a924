#pragma once

// Synthetic signal generation: atrial-fibrillation ECG (ventricular activity
// plus sawtooth f-waves, no P wave) and mains interference with the
// fluctuation structure allowed by supply-quality standards.
//
// Determinism contract: a (config, seed) pair reproduces the exact same
// samples on every platform. All draws go through the explicit Rng and each
// generator owns derived sub-streams, so components can be regenerated
// standalone and still match what a composite call produced.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pliwave/rng.hpp"
#include "pliwave/signal.hpp"

namespace pliwave {

// ---------------------------------------------------------------------------
// AF ECG

struct AfEcgConfig {
    std::uint64_t seed = 1;
    double duration_s = 60.0;
    double sample_rate_hz = 1000.0;
    double heart_rate_bpm = 80.0;
    double rr_variability = 0.0;        // per-beat uniform RR deviation, fraction of the mean
    double r_amplitude_mv = 1.0;

    double fwave_amplitude_uv = 75.0;   // peak amplitude; peak-to-peak is twice this
    std::optional<double> fwave_fundamental_hz;  // drawn from N(6, 1.5) clamped to [3, 9] when unset
    int fwave_harmonics = 3;
    double fwave_fm_deviation_hz = 0.2;
    double fwave_fm_rate_hz = 0.1;

    void validate() const {
        if (!(duration_s > 0.0)) throw std::invalid_argument("AfEcgConfig: duration must be positive");
        if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("AfEcgConfig: rate must be positive");
        if (heart_rate_bpm < 30.0 || heart_rate_bpm > 220.0)
            throw std::invalid_argument("AfEcgConfig: heart rate must lie in [30, 220] bpm");
        if (rr_variability < 0.0 || rr_variability > 0.25)
            throw std::invalid_argument("AfEcgConfig: rr_variability must lie in [0, 0.25]");
        if (fwave_amplitude_uv < 0.0)
            throw std::invalid_argument("AfEcgConfig: f-wave amplitude must be non-negative");
        if (fwave_fundamental_hz && !(*fwave_fundamental_hz > 0.0))
            throw std::invalid_argument("AfEcgConfig: f-wave fundamental must be positive");
        if (fwave_harmonics < 1) throw std::invalid_argument("AfEcgConfig: need at least one f-wave term");
    }
};

struct VentricularTrack {
    Signal signal;
    std::vector<std::size_t> r_peaks;
};

namespace detail {

// Gaussian event table for the phase-domain ECG model, P wave removed:
// atrial fibrillation replaces organized atrial depolarization with f-waves,
// which are synthesized separately. Angles are relative to the R peak.
// Columns: name, angle (degrees), magnitude, angular width.
inline constexpr std::string_view kVentricularEventTable = R"TABLE(
Q  -15.0  -5.00  0.1
R    0.0  30.00  0.1
S   15.0  -7.50  0.1
T   90.0   0.75  0.4
)TABLE";

struct VentricularEvent {
    std::string name;
    double theta;  // radians
    double a;
    double b;
};

inline const std::vector<VentricularEvent>& ventricular_events() {
    static const std::vector<VentricularEvent> events = [] {
        std::vector<VentricularEvent> out;
        std::istringstream in{std::string(kVentricularEventTable)};
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line.front() == '#') continue;
            std::istringstream fields(line);
            std::string name;
            double deg, a, b;
            if (fields >> name >> deg >> a >> b)
                out.push_back({name, deg * std::numbers::pi / 180.0, a, b});
        }
        return out;
    }();
    return events;
}

// Beats do not compress proportionally with the cardiac cycle: QRS duration
// shrinks roughly with the square root of the rate and the QT interval lags
// the cycle too. The model captures that by widening the angular widths by
// sqrt(rate / 60) while the cycle itself shortens as 1 / rate, moving the
// narrow Q and S deflections outward by the same factor and the broad T wave
// by its square root. At 60 bpm the table is used as is.
inline std::vector<VentricularEvent> morphed_events(double heart_rate_bpm) {
    const double width_fact = std::sqrt(heart_rate_bpm / 60.0);
    const double wave_fact = std::sqrt(width_fact);
    std::vector<VentricularEvent> out = ventricular_events();
    for (auto& ev : out) {
        ev.b *= width_fact;
        const bool broad_wave = ev.name == "T" || ev.name == "P";
        ev.theta *= broad_wave ? wave_fact : width_fact;
    }
    return out;
}

inline double wrap_pi(double x) {
    // onto (-pi, pi]
    x = std::fmod(x, 2.0 * std::numbers::pi);
    if (x <= -std::numbers::pi) x += 2.0 * std::numbers::pi;
    if (x > std::numbers::pi) x -= 2.0 * std::numbers::pi;
    return x;
}

inline constexpr std::uint64_t kVentricularStream = 0x76656e74;  // sub-seed tags
inline constexpr std::uint64_t kAtrialStream = 0x61667761;
inline constexpr std::uint64_t kPliFreqStream = 1;
inline constexpr std::uint64_t kPliAmpStream = 2;
inline constexpr std::uint64_t kPliComponentStream = 3;
inline constexpr std::uint64_t kPliScenarioStream = 4;

}  // namespace detail

// Ventricular activity from the phase-plane Gaussian-event model. The phase
// advances by 2 pi per beat (one full cycle per RR interval, R at phase
// zero); the trace solves
//   dz/dt = -sum_i a_i dth_i exp(-dth_i^2 / (2 b_i^2)) - z
// with a fixed-step 4th-order Runge-Kutta scheme at the sample interval.
// The result is scaled so the median R amplitude equals r_amplitude_mv, and
// R-peak ground-truth annotations are returned alongside.
inline VentricularTrack synth_ventricular(const AfEcgConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, detail::kVentricularStream));

    const double fs = cfg.sample_rate_hz;
    const double dt = 1.0 / fs;
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    const double mean_rr = 60.0 / cfg.heart_rate_bpm;
    const auto events = detail::morphed_events(cfg.heart_rate_bpm);

    auto draw_rr = [&] {
        return mean_rr * (1.0 + cfg.rr_variability * rng.uniform(-1.0, 1.0));
    };
    auto slope = [&](double phase, double z) {
        double dz = -z;
        for (const auto& ev : events) {
            const double d = detail::wrap_pi(phase - ev.theta);
            const double q = d * d / (2.0 * ev.b * ev.b);
            if (q < 40.0) dz -= ev.a * d * std::exp(-q);
        }
        return dz;
    };

    std::vector<double> z(n, 0.0);
    std::vector<std::size_t> crossings;
    // Start half a beat before the first R peak so the record opens on
    // diastole rather than mid-complex.
    double phase = -std::numbers::pi;
    double omega = 2.0 * std::numbers::pi / draw_rr();
    double zv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = zv;
        const double k1 = slope(phase, zv);
        const double k2 = slope(phase + omega * dt / 2.0, zv + dt / 2.0 * k1);
        const double k3 = slope(phase + omega * dt / 2.0, zv + dt / 2.0 * k2);
        const double k4 = slope(phase + omega * dt, zv + dt * k3);
        zv += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double prev = phase;
        phase += omega * dt;
        if (prev < 0.0 && phase >= 0.0 && i + 1 < n) crossings.push_back(i + 1);
        if (phase >= 2.0 * std::numbers::pi) {
            phase -= 2.0 * std::numbers::pi;
            omega = 2.0 * std::numbers::pi / draw_rr();
            if (phase >= 0.0 && i + 1 < n) crossings.push_back(i + 1);
        }
    }

    // Refine each phase crossing to the local trace maximum nearby.
    const std::size_t refine = static_cast<std::size_t>(std::llround(0.010 * fs));
    std::vector<std::size_t> peaks;
    for (std::size_t c : crossings) {
        const std::size_t lo = c >= refine ? c - refine : 0;
        const std::size_t hi = std::min(n - 1, c + refine);
        std::size_t best = lo;
        for (std::size_t k = lo + 1; k <= hi; ++k)
            if (z[k] > z[best]) best = k;
        if (peaks.empty() || best > peaks.back()) peaks.push_back(best);
    }

    double scale = 1.0;
    if (!peaks.empty()) {
        std::vector<double> heights;
        heights.reserve(peaks.size());
        for (std::size_t p : peaks) heights.push_back(z[p]);
        std::nth_element(heights.begin(), heights.begin() + static_cast<std::ptrdiff_t>(heights.size() / 2),
                         heights.end());
        const double med = heights[heights.size() / 2];
        if (med > 0.0) scale = cfg.r_amplitude_mv / med;
    }
    for (auto& v : z) v *= scale;

    VentricularTrack out;
    out.signal = make_signal(std::move(z), fs);
    out.signal.annotations = peaks;
    out.r_peaks = std::move(peaks);
    return out;
}

// Fibrillatory waves: a sawtooth at a fluctuating fundamental, built from the
// first `fwave_harmonics` Fourier terms,
//   a(t) = sum_m (2 A / m pi) sin(2 pi m phi(t)),
//   phi'(t) = f0 + df sin(2 pi f_fm t),
// then rescaled so peak-to-peak amplitude is exactly twice the configured
// peak amplitude. The frequency modulation gives the waves their
// characteristic drifting, never-quite-periodic look.
inline Signal synth_fwaves(const AfEcgConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, detail::kAtrialStream));

    const double fs = cfg.sample_rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    double f0 = cfg.fwave_fundamental_hz ? *cfg.fwave_fundamental_hz
                                         : std::clamp(rng.gaussian(6.0, 1.5), 3.0, 9.0);

    Signal out = make_signal(std::vector<double>(n, 0.0), fs);
    if (cfg.fwave_amplitude_uv == 0.0) return out;

    const double df = cfg.fwave_fm_deviation_hz;
    const double fm = cfg.fwave_fm_rate_hz;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        // closed-form phase integral of f0 + df sin(2 pi fm t), in cycles
        const double phi = (fm > 0.0 && df > 0.0)
                               ? f0 * t + df / (2.0 * std::numbers::pi * fm) *
                                              (1.0 - std::cos(2.0 * std::numbers::pi * fm * t))
                               : f0 * t;
        double v = 0.0;
        for (int m = 1; m <= cfg.fwave_harmonics; ++m)
            v += 2.0 / (m * std::numbers::pi) * std::sin(2.0 * std::numbers::pi * m * phi);
        out.samples[i] = v;
    }

    const auto [lo, hi] = std::minmax_element(out.samples.begin(), out.samples.end());
    const double span = *hi - *lo;
    const double target_p2p_mv = 2.0 * cfg.fwave_amplitude_uv * 1e-3;
    if (span > 0.0) {
        const double g = target_p2p_mv / span;
        for (auto& v : out.samples) v *= g;
    }
    return out;
}

struct GeneratedRecord {
    Signal composite;
    Signal ventricular;
    Signal atrial;
    Signal noise;  // zero track until a mixing step fills it
    std::vector<std::size_t> r_peaks;
};

inline GeneratedRecord synth_af_ecg(const AfEcgConfig& cfg) {
    cfg.validate();
    VentricularTrack vent = synth_ventricular(cfg);
    Signal atrial = synth_fwaves(cfg);

    GeneratedRecord rec;
    rec.r_peaks = vent.r_peaks;
    rec.ventricular = std::move(vent.signal);
    rec.ventricular.annotations.clear();
    rec.atrial = std::move(atrial);
    rec.noise = make_signal(std::vector<double>(rec.ventricular.size(), 0.0), cfg.sample_rate_hz);
    rec.composite = make_signal(std::vector<double>(rec.ventricular.size(), 0.0), cfg.sample_rate_hz);
    for (std::size_t i = 0; i < rec.composite.size(); ++i)
        rec.composite.samples[i] = rec.ventricular.samples[i] + rec.atrial.samples[i];
    rec.composite.annotations = rec.r_peaks;
    return rec;
}

// ---------------------------------------------------------------------------
// Power-line interference

enum class PliScenario { common, amp_varying, freq_dev };

inline const char* scenario_name(PliScenario s) {
    switch (s) {
        case PliScenario::common: return "common";
        case PliScenario::amp_varying: return "amp-varying";
        case PliScenario::freq_dev: return "freq-dev";
    }
    throw std::logic_error("scenario_name: bad enum");
}

inline PliScenario parse_scenario(const std::string& name) {
    for (PliScenario s : {PliScenario::common, PliScenario::amp_varying, PliScenario::freq_dev})
        if (name == scenario_name(s)) return s;
    throw std::invalid_argument("unknown scenario '" + name +
                                "' (expected common, amp-varying or freq-dev)");
}

struct PliConfig {
    std::uint64_t seed = 1;
    PliScenario scenario = PliScenario::common;
    double duration_s = 60.0;
    double sample_rate_hz = 1000.0;

    double fundamental_hz = 50.0;
    double max_freq_fraction = 0.01;   // slow frequency wander, fraction of nominal
    double max_amp_fraction = 0.10;    // slow amplitude wander, fraction of nominal
    double fluctuation_update_hz = 1.0;
    // Power of harmonics 2..5 relative to the fundamental.
    std::array<double, 4> harmonic_power_fractions{0.02, 0.05, 0.01, 0.06};
    bool harmonics_enabled = true;
    bool fluctuations_enabled = true;  // false: pure tones, for degenerate test setups
    double interharmonic_fm_deviation_hz = 0.5;

    // amp-varying scenario: silence before onset, then sinusoidal envelope
    // modulation at am_rate_hz (drawn from [0.5, 2] Hz when unset).
    double onset_s = 10.0;
    std::optional<double> am_rate_hz;
    // freq-dev scenario: nominal offset (drawn from [-3, 3] Hz when unset);
    // harmonic frequencies scale proportionally.
    std::optional<double> freq_offset_hz;

    void validate() const {
        if (!(duration_s > 0.0)) throw std::invalid_argument("PliConfig: duration must be positive");
        if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("PliConfig: rate must be positive");
        if (!(fundamental_hz > 0.0)) throw std::invalid_argument("PliConfig: fundamental must be positive");
        if (max_freq_fraction < 0.0 || max_amp_fraction < 0.0)
            throw std::invalid_argument("PliConfig: fluctuation bounds must be non-negative");
        if (!(fluctuation_update_hz > 0.0))
            throw std::invalid_argument("PliConfig: fluctuation update rate must be positive");
        for (double f : harmonic_power_fractions)
            if (f < 0.0) throw std::invalid_argument("PliConfig: harmonic power fractions must be non-negative");
        if (onset_s < 0.0) throw std::invalid_argument("PliConfig: onset must be non-negative");
        if (scenario == PliScenario::amp_varying && onset_s >= duration_s)
            throw std::invalid_argument("PliConfig: onset must fall inside the record");
        if (am_rate_hz && !(*am_rate_hz > 0.0))
            throw std::invalid_argument("PliConfig: envelope rate must be positive");
    }
};

namespace detail {

// Clipped random walk sampled at the fluctuation update rate and linearly
// interpolated in between. Knot zero is itself a draw, so two records with
// different seeds differ from the first sample on.
struct FluctuationWalk {
    std::vector<double> knots;
    double update_hz = 1.0;

    static FluctuationWalk make(Rng& rng, double duration_s, double update_hz, double cap) {
        FluctuationWalk walk;
        walk.update_hz = update_hz;
        const std::size_t count = static_cast<std::size_t>(std::floor(duration_s * update_hz)) + 2;
        walk.knots.reserve(count);
        double v = cap > 0.0 ? rng.uniform(-cap, cap) : 0.0;
        walk.knots.push_back(v);
        for (std::size_t k = 1; k < count; ++k) {
            v = std::clamp(v + (cap > 0.0 ? rng.uniform(-cap / 2.0, cap / 2.0) : 0.0), -cap, cap);
            walk.knots.push_back(v);
        }
        return walk;
    }

    static FluctuationWalk zero(double duration_s, double update_hz) {
        FluctuationWalk walk;
        walk.update_hz = update_hz;
        walk.knots.assign(static_cast<std::size_t>(std::floor(duration_s * update_hz)) + 2, 0.0);
        return walk;
    }

    double at(double t) const {
        const double x = t * update_hz;
        const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(x)));
        if (k + 1 >= knots.size()) return knots.back();
        const double frac = x - static_cast<double>(k);
        return knots[k] + frac * (knots[k + 1] - knots[k]);
    }
};

struct PliDraws {
    FluctuationWalk freq_walk;
    FluctuationWalk amp_walk;
    double base_hz = 50.0;  // nominal after any scenario offset
    double am_rate_hz = 0.0;
    struct Component {
        double amp;
        double fm_rate_hz;
        double fm_index;   // phase deviation = index * sin(...)
        double phase0;
    };
    std::vector<Component> components;  // index h-1 holds the h-th multiple
};

// One place performs every draw, in a fixed documented order, so the full
// generator and the frequency-track accessor agree sample for sample.
inline PliDraws make_pli_draws(const PliConfig& cfg) {
    cfg.validate();
    PliDraws d;

    Rng freq_rng(mix_seed(cfg.seed, kPliFreqStream));
    Rng amp_rng(mix_seed(cfg.seed, kPliAmpStream));
    Rng comp_rng(mix_seed(cfg.seed, kPliComponentStream));
    Rng scenario_rng(mix_seed(cfg.seed, kPliScenarioStream));

    d.freq_walk = cfg.fluctuations_enabled
                      ? FluctuationWalk::make(freq_rng, cfg.duration_s, cfg.fluctuation_update_hz,
                                              cfg.max_freq_fraction)
                      : FluctuationWalk::zero(cfg.duration_s, cfg.fluctuation_update_hz);
    d.amp_walk = cfg.fluctuations_enabled
                     ? FluctuationWalk::make(amp_rng, cfg.duration_s, cfg.fluctuation_update_hz,
                                             cfg.max_amp_fraction)
                     : FluctuationWalk::zero(cfg.duration_s, cfg.fluctuation_update_hz);

    d.base_hz = cfg.fundamental_hz;
    if (cfg.scenario == PliScenario::freq_dev)
        d.base_hz += cfg.freq_offset_hz ? *cfg.freq_offset_hz : scenario_rng.uniform(-3.0, 3.0);
    if (cfg.scenario == PliScenario::amp_varying)
        d.am_rate_hz = cfg.am_rate_hz ? *cfg.am_rate_hz : scenario_rng.uniform(0.5, 2.0);

    const int count = cfg.harmonics_enabled ? 5 : 1;
    for (int h = 1; h <= count; ++h) {
        PliDraws::Component c;
        c.amp = h == 1 ? 1.0 : std::sqrt(cfg.harmonic_power_fractions[static_cast<std::size_t>(h - 2)]);
        c.phase0 = comp_rng.uniform(0.0, 2.0 * std::numbers::pi);
        // Interharmonic content: narrowband FM. Rates around 10 Hz keep the
        // modulation index small, so the first sideband pair stays below
        // 0.2 % of the carrier power.
        c.fm_rate_hz = comp_rng.uniform(7.0, 13.0);
        c.fm_index = cfg.fluctuations_enabled && cfg.interharmonic_fm_deviation_hz > 0.0
                         ? cfg.interharmonic_fm_deviation_hz / c.fm_rate_hz
                         : 0.0;
        d.components.push_back(c);
    }
    return d;
}

}  // namespace detail

// Mains-frequency ground truth in Hz per sample: the nominal (scenario-
// offset) fundamental times the slow frequency walk. The narrowband FM
// dither that models interharmonics is a separate additive component and is
// deliberately not part of this track.
inline Signal instantaneous_frequency_track(const PliConfig& cfg) {
    const detail::PliDraws d = detail::make_pli_draws(cfg);
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate_hz));
    Signal out = make_signal(std::vector<double>(n), cfg.sample_rate_hz);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / cfg.sample_rate_hz;
        out.samples[i] = d.base_hz * (1.0 + d.freq_walk.at(t));
    }
    return out;
}

inline Signal synth_pli(const PliConfig& cfg) {
    const detail::PliDraws d = detail::make_pli_draws(cfg);
    const double fs = cfg.sample_rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    const double dt = 1.0 / fs;

    Signal out = make_signal(std::vector<double>(n, 0.0), fs);
    double base_phase = 0.0;  // fundamental phase integral, radians
    double prev_f = d.base_hz * (1.0 + d.freq_walk.at(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double f = d.base_hz * (1.0 + d.freq_walk.at(t));
        if (i > 0) base_phase += std::numbers::pi * (prev_f + f) * dt;  // trapezoidal 2 pi f dt
        prev_f = f;

        double v = 0.0;
        for (std::size_t h = 0; h < d.components.size(); ++h) {
            const auto& c = d.components[h];
            const double dither =
                c.fm_index > 0.0
                    ? c.fm_index * std::sin(2.0 * std::numbers::pi * c.fm_rate_hz * t + c.phase0)
                    : 0.0;
            v += c.amp * std::sin(static_cast<double>(h + 1) * base_phase + c.phase0 + dither);
        }
        v *= 1.0 + d.amp_walk.at(t);

        if (cfg.scenario == PliScenario::amp_varying) {
            if (t < cfg.onset_s) {
                v = 0.0;
            } else {
                v *= 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * d.am_rate_hz * t);
            }
        }
        out.samples[i] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibrated mixing

struct RecordPair {
    GeneratedRecord clean;
    GeneratedRecord noisy;
    double noise_gain = 0.0;
};

// Generates a clean record and the same record with interference mixed at
// the requested SNR. For the amp-varying scenario the power calibration runs
// over the active region (from onset on) only; the silent lead-in would
// otherwise understate the interference power.
inline RecordPair synth_noise_free_pair(const AfEcgConfig& ecg_cfg, const PliConfig& pli_cfg,
                                        SnrDb snr) {
    ecg_cfg.validate();
    pli_cfg.validate();
    if (pli_cfg.duration_s != ecg_cfg.duration_s || pli_cfg.sample_rate_hz != ecg_cfg.sample_rate_hz)
        throw std::invalid_argument("synth_noise_free_pair: ECG and PLI configs disagree on geometry");

    RecordPair pair;
    pair.clean = synth_af_ecg(ecg_cfg);
    const Signal pli = synth_pli(pli_cfg);

    std::size_t calib_begin = 0;
    if (pli_cfg.scenario == PliScenario::amp_varying) {
        calib_begin = static_cast<std::size_t>(std::llround(pli_cfg.onset_s * pli_cfg.sample_rate_hz));
        if (calib_begin >= pli.size())
            throw std::invalid_argument("synth_noise_free_pair: onset leaves no active region");
    }
    const MixResult mix = mix_at_snr(pair.clean.composite, pli, snr, calib_begin);

    pair.noisy = pair.clean;
    pair.noisy.noise = mix.scaled_noise;
    pair.noisy.composite = mix.noisy;
    pair.noisy.composite.annotations = pair.clean.r_peaks;
    pair.noise_gain = mix.noise_gain;
    return pair;
}

}  // namespace pliwave
