#pragma once

// Reference interference filters: a fixed Butterworth band-stop notch and an
// adaptive least-mean-squares canceller with quadrature references.
//
// The IIR design runs the textbook analog route: Butterworth prototype poles,
// lowpass-to-bandstop (or bandpass) transform at prewarped edge frequencies,
// bilinear transform, then grouping into second-order sections. Band edges
// therefore sit exactly at the -3 dB points by construction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pliwave/signal.hpp"

namespace pliwave {

struct BiquadSection {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
    double a1 = 0.0, a2 = 0.0;            // denominator (a0 normalized to 1)
};

struct BiquadCascade {
    std::vector<BiquadSection> sections;
    double sample_rate_hz = 0.0;
    std::string description;
};

namespace detail {

using cd = std::complex<double>;

struct Zpk {
    std::vector<cd> zeros, poles;
    double gain = 1.0;
};

inline Zpk butterworth_prototype(int order) {
    Zpk proto;
    proto.gain = 1.0;
    for (int k = 0; k < order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order);
        proto.poles.push_back(std::polar(1.0, theta));
    }
    return proto;
}

inline Zpk lowpass_to_bandstop(const Zpk& in, double wo, double bw) {
    Zpk out;
    const std::size_t degree = in.poles.size() - in.zeros.size();
    auto transform = [&](const cd& s) {
        const cd inv = (bw / 2.0) / s;
        const cd root = std::sqrt(inv * inv - wo * wo);
        return std::pair<cd, cd>{inv + root, inv - root};
    };
    for (const auto& z : in.zeros) {
        auto [a, b] = transform(z);
        out.zeros.push_back(a);
        out.zeros.push_back(b);
    }
    for (const auto& p : in.poles) {
        auto [a, b] = transform(p);
        out.poles.push_back(a);
        out.poles.push_back(b);
    }
    for (std::size_t i = 0; i < degree; ++i) {
        out.zeros.push_back(cd(0.0, wo));
        out.zeros.push_back(cd(0.0, -wo));
    }
    cd num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& z : in.zeros) num *= -z;
    for (const auto& p : in.poles) den *= -p;
    out.gain = in.gain * (num / den).real();
    return out;
}

inline Zpk lowpass_to_bandpass(const Zpk& in, double wo, double bw) {
    Zpk out;
    const std::size_t degree = in.poles.size() - in.zeros.size();
    auto transform = [&](const cd& s) {
        const cd scaled = s * (bw / 2.0);
        const cd root = std::sqrt(scaled * scaled - wo * wo);
        return std::pair<cd, cd>{scaled + root, scaled - root};
    };
    for (const auto& z : in.zeros) {
        auto [a, b] = transform(z);
        out.zeros.push_back(a);
        out.zeros.push_back(b);
    }
    for (const auto& p : in.poles) {
        auto [a, b] = transform(p);
        out.poles.push_back(a);
        out.poles.push_back(b);
    }
    for (std::size_t i = 0; i < degree; ++i) out.zeros.push_back(cd(0.0, 0.0));
    out.gain = in.gain * std::pow(bw, static_cast<double>(degree));
    return out;
}

inline Zpk bilinear(const Zpk& in, double sample_rate_hz) {
    const double fs2 = 2.0 * sample_rate_hz;
    Zpk out;
    auto map = [&](const cd& s) { return (fs2 + s) / (fs2 - s); };
    for (const auto& z : in.zeros) out.zeros.push_back(map(z));
    for (const auto& p : in.poles) out.poles.push_back(map(p));
    cd num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& z : in.zeros) num *= (fs2 - z);
    for (const auto& p : in.poles) den *= (fs2 - p);
    out.gain = in.gain * (num / den).real();
    // Zeros lost at infinity land at z = -1.
    while (out.zeros.size() < out.poles.size()) out.zeros.push_back(cd(-1.0, 0.0));
    return out;
}

// Groups a conjugate-closed zpk set into second-order sections. Conjugate
// pairs map to one section; real roots are paired positive-with-negative
// when possible so each section stays well scaled.
inline BiquadCascade zpk_to_sections(const Zpk& in, double sample_rate_hz) {
    constexpr double kImagTol = 1e-9;
    auto split = [&](const std::vector<cd>& roots) {
        std::vector<cd> complex_half;
        std::vector<double> reals;
        for (const auto& r : roots) {
            if (std::abs(r.imag()) > kImagTol) {
                if (r.imag() > 0.0) complex_half.push_back(r);
            } else {
                reals.push_back(r.real());
            }
        }
        return std::pair{complex_half, reals};
    };
    auto [zc, zr] = split(in.zeros);
    auto [pc, pr] = split(in.poles);
    if (in.zeros.size() != in.poles.size() || (in.zeros.size() % 2) != 0)
        throw std::invalid_argument("zpk_to_sections: expected an even, balanced root set");

    auto pair_reals = [](std::vector<double>& v) {
        std::vector<std::pair<double, double>> pairs;
        std::sort(v.begin(), v.end());
        while (v.size() >= 2) {
            const double lo = v.front();
            const double hi = v.back();
            v.erase(v.begin());
            v.pop_back();
            pairs.emplace_back(lo, hi);
        }
        return pairs;
    };
    auto zr_pairs = pair_reals(zr);
    auto pr_pairs = pair_reals(pr);

    BiquadCascade cascade;
    cascade.sample_rate_hz = sample_rate_hz;
    std::size_t zi = 0, pi = 0, zri = 0, pri = 0;
    const std::size_t n_sections = in.poles.size() / 2;
    for (std::size_t s = 0; s < n_sections; ++s) {
        BiquadSection sec;
        if (zi < zc.size()) {
            const cd z = zc[zi++];
            sec.b0 = 1.0;
            sec.b1 = -2.0 * z.real();
            sec.b2 = std::norm(z);
        } else {
            const auto [lo, hi] = zr_pairs[zri++];
            sec.b0 = 1.0;
            sec.b1 = -(lo + hi);
            sec.b2 = lo * hi;
        }
        if (pi < pc.size()) {
            const cd p = pc[pi++];
            sec.a1 = -2.0 * p.real();
            sec.a2 = std::norm(p);
        } else {
            const auto [lo, hi] = pr_pairs[pri++];
            sec.a1 = -(lo + hi);
            sec.a2 = lo * hi;
        }
        cascade.sections.push_back(sec);
    }
    if (!cascade.sections.empty()) {
        cascade.sections.front().b0 *= in.gain;
        cascade.sections.front().b1 *= in.gain;
        cascade.sections.front().b2 *= in.gain;
    }
    return cascade;
}

}  // namespace detail

inline BiquadCascade design_butterworth_bandstop(double center_hz, double half_bandwidth_hz,
                                                 double sample_rate_hz, int order = 2) {
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("design_butterworth_bandstop: rate must be positive");
    const double f_lo = center_hz - half_bandwidth_hz;
    const double f_hi = center_hz + half_bandwidth_hz;
    if (!(f_lo > 0.0) || !(f_hi < sample_rate_hz / 2.0) || !(half_bandwidth_hz > 0.0))
        throw std::invalid_argument("design_butterworth_bandstop: band must lie inside (0, Nyquist)");
    if (order < 1 || order > 8)
        throw std::invalid_argument("design_butterworth_bandstop: order out of range");

    const double w1 = 2.0 * sample_rate_hz * std::tan(std::numbers::pi * f_lo / sample_rate_hz);
    const double w2 = 2.0 * sample_rate_hz * std::tan(std::numbers::pi * f_hi / sample_rate_hz);
    auto zpk = detail::lowpass_to_bandstop(detail::butterworth_prototype(order),
                                           std::sqrt(w1 * w2), w2 - w1);
    auto cascade = detail::zpk_to_sections(detail::bilinear(zpk, sample_rate_hz), sample_rate_hz);
    std::ostringstream desc;
    desc << "butterworth bandstop order " << order << ", " << f_lo << "-" << f_hi << " Hz at "
         << sample_rate_hz << " Hz";
    cascade.description = desc.str();
    return cascade;
}

inline BiquadCascade design_butterworth_bandpass(double f_lo, double f_hi,
                                                 double sample_rate_hz, int order = 2) {
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("design_butterworth_bandpass: rate must be positive");
    if (!(f_lo > 0.0) || !(f_hi < sample_rate_hz / 2.0) || !(f_hi > f_lo))
        throw std::invalid_argument("design_butterworth_bandpass: band must lie inside (0, Nyquist)");
    if (order < 1 || order > 8)
        throw std::invalid_argument("design_butterworth_bandpass: order out of range");

    const double w1 = 2.0 * sample_rate_hz * std::tan(std::numbers::pi * f_lo / sample_rate_hz);
    const double w2 = 2.0 * sample_rate_hz * std::tan(std::numbers::pi * f_hi / sample_rate_hz);
    auto zpk = detail::lowpass_to_bandpass(detail::butterworth_prototype(order),
                                           std::sqrt(w1 * w2), w2 - w1);
    auto cascade = detail::zpk_to_sections(detail::bilinear(zpk, sample_rate_hz), sample_rate_hz);
    std::ostringstream desc;
    desc << "butterworth bandpass order " << order << ", " << f_lo << "-" << f_hi << " Hz at "
         << sample_rate_hz << " Hz";
    cascade.description = desc.str();
    return cascade;
}

inline bool is_stable(const BiquadCascade& cascade) {
    for (const auto& s : cascade.sections)
        if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2)) return false;
    return true;
}

inline double frequency_response_magnitude(const BiquadCascade& cascade, double hz) {
    const double w = 2.0 * std::numbers::pi * hz / cascade.sample_rate_hz;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h(1.0, 0.0);
    for (const auto& s : cascade.sections)
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return std::abs(h);
}

inline std::string dump_coefficients(const BiquadCascade& cascade) {
    std::ostringstream out;
    out.precision(17);
    out << "# " << cascade.description << "\n";
    out << "# section b0 b1 b2 a1 a2\n";
    for (std::size_t i = 0; i < cascade.sections.size(); ++i) {
        const auto& s = cascade.sections[i];
        out << i << ' ' << s.b0 << ' ' << s.b1 << ' ' << s.b2 << ' ' << s.a1 << ' ' << s.a2 << '\n';
    }
    return out.str();
}

// Causal direct-form-II-transposed run over the whole record, zero initial
// state. The group delay near the band edges is the price of causality; it is
// documented rather than compensated, so annotations are left untouched.
inline Signal filter_signal(const BiquadCascade& cascade, const Signal& in) {
    validate_signal(in, "filter_signal");
    if (cascade.sections.empty())
        throw std::invalid_argument("filter_signal: empty cascade");
    if (cascade.sample_rate_hz != in.sample_rate_hz)
        throw std::invalid_argument("filter_signal: cascade designed for a different sample rate");

    Signal out = in;
    std::vector<std::pair<double, double>> state(cascade.sections.size(), {0.0, 0.0});
    for (std::size_t n = 0; n < out.samples.size(); ++n) {
        double v = out.samples[n];
        for (std::size_t s = 0; s < cascade.sections.size(); ++s) {
            const auto& c = cascade.sections[s];
            auto& [s1, s2] = state[s];
            const double y = c.b0 * v + s1;
            s1 = c.b1 * v - c.a1 * y + s2;
            s2 = c.b2 * v - c.a2 * y;
            v = y;
        }
        out.samples[n] = v;
    }
    return out;
}

struct AdaptiveNotchConfig {
    double step_size = 0.01;      // LMS step, w <- w + 2 mu e ref
    double fundamental_hz = 50.0;
    int harmonic_count = 5;       // quadrature replicas at 1..harmonic_count x fundamental
};

// Quadrature-reference LMS canceller. Each harmonic replica owns an in-phase
// and a quadrature weight; the error signal (input minus the summed weighted
// references) is both the output and the adaptation driver.
inline Signal adaptive_notch(const Signal& in, const AdaptiveNotchConfig& cfg = {}) {
    validate_signal(in, "adaptive_notch");
    if (!(cfg.step_size > 0.0) || cfg.step_size >= 1.0)
        throw std::invalid_argument("adaptive_notch: step size must lie in (0, 1)");
    if (cfg.harmonic_count < 1 || cfg.harmonic_count > 16)
        throw std::invalid_argument("adaptive_notch: harmonic count out of range");
    if (!(cfg.fundamental_hz > 0.0) ||
        cfg.fundamental_hz * cfg.harmonic_count >= in.sample_rate_hz / 2.0)
        throw std::invalid_argument("adaptive_notch: harmonics must stay below Nyquist");
    for (double v : in.samples)
        if (!std::isfinite(v)) throw std::invalid_argument("adaptive_notch: non-finite input");

    const int H = cfg.harmonic_count;
    std::vector<double> wi(static_cast<std::size_t>(H), 0.0);
    std::vector<double> wq(static_cast<std::size_t>(H), 0.0);
    std::vector<double> c(static_cast<std::size_t>(H)), s(static_cast<std::size_t>(H));

    Signal out = in;
    const double dphi = 2.0 * std::numbers::pi * cfg.fundamental_hz / in.sample_rate_hz;
    double phi = 0.0;
    for (std::size_t n = 0; n < in.samples.size(); ++n) {
        double est = 0.0;
        for (int h = 0; h < H; ++h) {
            const double a = phi * (h + 1);
            c[static_cast<std::size_t>(h)] = std::cos(a);
            s[static_cast<std::size_t>(h)] = std::sin(a);
            est += wi[static_cast<std::size_t>(h)] * c[static_cast<std::size_t>(h)] +
                   wq[static_cast<std::size_t>(h)] * s[static_cast<std::size_t>(h)];
        }
        const double e = in.samples[n] - est;
        out.samples[n] = e;
        const double g = 2.0 * cfg.step_size * e;
        for (int h = 0; h < H; ++h) {
            wi[static_cast<std::size_t>(h)] += g * c[static_cast<std::size_t>(h)];
            wq[static_cast<std::size_t>(h)] += g * s[static_cast<std::size_t>(h)];
        }
        phi += dphi;
        if (phi > 2.0 * std::numbers::pi) phi -= 2.0 * std::numbers::pi;
    }
    return out;
}

}  // namespace pliwave
