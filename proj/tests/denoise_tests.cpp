#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "pliwave/denoise.hpp"
#include "pliwave/evaluation.hpp"
#include "pliwave/rng.hpp"
#include "pliwave/signal.hpp"
#include "pliwave/synthesis.hpp"

#include "support/helpers.hpp"

using namespace pliwave;
using Catch::Approx;

TEST_CASE("levels_for_rate picks the octave containing 50 Hz", "[denoise]") {
    CHECK(levels_for_rate(1000.0) == 4);  // deepest detail spans 31.25-62.5 Hz
    CHECK(levels_for_rate(360.0) == 3);
    CHECK(levels_for_rate(250.0) == 3);   // clamped low
    CHECK(levels_for_rate(8000.0) == 6);  // clamped high
    REQUIRE_THROWS_AS(levels_for_rate(0.0), std::invalid_argument);
}

TEST_CASE("method names round-trip", "[denoise]") {
    for (Method m : {Method::proposed_hybrid, Method::hard_minimax, Method::soft_minimax,
                     Method::hyperbolic_minimax, Method::notch_fixed, Method::notch_adaptive}) {
        CHECK(parse_method(method_name(m)) == m);
    }
    CHECK(is_wavelet_method(Method::proposed_hybrid));
    CHECK_FALSE(is_wavelet_method(Method::notch_adaptive));
    REQUIRE_THROWS_AS(parse_method("fancy"), std::invalid_argument);
}

TEST_CASE("denoiser spec validation", "[denoise]") {
    DenoiserSpec spec;
    REQUIRE_NOTHROW(spec.validate());
    SECTION("bad wavelet") {
        spec.wavelet = "nope";
        REQUIRE_THROWS(spec.validate());
    }
    SECTION("bad window") {
        spec.window_ms = 0.0;
        REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SECTION("bad gate") {
        spec.qrs_gate_factor = 1.0;
        REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SECTION("bad scale") {
        spec.threshold_scale = 0.0;
        REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
    }
}

TEST_CASE("proposed denoiser removes steady interference from a bare tone", "[denoise]") {
    DenoiserSpec spec;
    spec.method = Method::proposed_hybrid;

    SECTION("grid-locked 50 Hz sine drops below one percent of input power") {
        const auto in = make_signal(testsupport::make_tone(10000, 1000.0, 50.0), 1000.0);
        const auto out = denoise(in, spec);
        REQUIRE(out.size() == in.size());
        CHECK(power(out) <= 0.01 * power(in));
    }
    SECTION("an off-grid tone is suppressed at least 20 dB") {
        const auto in = make_signal(testsupport::make_tone(10000, 1000.0, 49.73), 1000.0);
        const auto out = denoise(in, spec);
        CHECK(10.0 * std::log10(power(in) / std::max(power(out), 1e-300)) > 20.0);
    }
}

TEST_CASE("denoise preserves structure and annotations", "[denoise]") {
    AfEcgConfig cfg;
    cfg.duration_s = 20.0;
    cfg.sample_rate_hz = 1000.0;
    cfg.heart_rate_bpm = 80.0;
    cfg.seed = 42;
    const auto rec = synth_af_ecg(cfg);
    DenoiserSpec spec;

    SECTION("length and rate unchanged, annotations carried") {
        const auto out = denoise(rec.composite, spec);
        CHECK(out.size() == rec.composite.size());
        CHECK(out.sample_rate_hz == rec.composite.sample_rate_hz);
        CHECK(out.annotations == rec.composite.annotations);
    }
    SECTION("odd lengths are padded internally and trimmed back") {
        auto odd = rec.composite;
        odd.samples.resize(19997);
        odd.annotations.clear();
        const auto out = denoise(odd, spec);
        CHECK(out.size() == 19997);
    }
    SECTION("scaling equivariance of the whole chain") {
        auto scaled = rec.composite;
        for (auto& v : scaled.samples) v *= 3.7;
        const auto a = denoise(rec.composite, spec);
        const auto b = denoise(scaled, spec);
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            worst = std::max(worst, std::abs(b.samples[i] - 3.7 * a.samples[i]));
        CHECK(worst < 1e-9 * testsupport::max_abs(b.samples));
    }
    SECTION("a clean record passes nearly unharmed") {
        const auto out = denoise(rec.composite, spec);
        const auto report = evaluate(rec.composite, out, rec.r_peaks);
        CHECK(report.asci_global_pct >= 97.0);
    }
    SECTION("notch methods refuse the wavelet entry point but run via apply_method") {
        DenoiserSpec notch = spec;
        notch.method = Method::notch_fixed;
        REQUIRE_THROWS_AS(denoise(rec.composite, notch), std::invalid_argument);
        const auto out = apply_method(rec.composite, notch);
        CHECK(out.size() == rec.composite.size());
        notch.method = Method::notch_adaptive;
        const auto out2 = apply_method(rec.composite, notch);
        CHECK(out2.size() == rec.composite.size());
    }
}

TEST_CASE("shrink_details never touches the approximation", "[denoise]") {
    Rng rng(17);
    std::vector<double> x(4096);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto sig = make_signal(x, 1000.0);
    const auto w = load_wavelet("db6");
    const auto dec = swt_decompose(sig, w, 4);

    DenoiserSpec spec;
    for (Method m : {Method::proposed_hybrid, Method::hard_minimax, Method::soft_minimax,
                     Method::hyperbolic_minimax}) {
        spec.method = m;
        const auto shrunk = shrink_details(dec, spec);
        REQUIRE(shrunk.approximation == dec.approximation);
    }
}

TEST_CASE("baseline minimax methods kill a weak global noise floor", "[denoise]") {
    // white noise + strong low-frequency carrier: the minimax threshold should
    // remove most of the broadband detail while keeping the carrier
    Rng rng(77);
    const std::size_t n = 16384;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / 1000.0;
        x[i] = 4.0 * std::sin(2.0 * std::numbers::pi * 2.0 * t) + 0.1 * rng.gaussian();
    }
    const auto in = make_signal(x, 1000.0);
    DenoiserSpec spec;
    spec.method = Method::soft_minimax;
    const auto out = denoise(in, spec);

    const double carrier = testsupport::sine_fit_amplitude(out.samples, 1000.0, 2.0);
    CHECK(carrier == Approx(4.0).epsilon(0.05));
    // residual after removing the carrier fit should be well below the input noise
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / 1000.0;
        const double r = out.samples[i] - carrier * std::sin(2.0 * std::numbers::pi * 2.0 * t);
        resid += r * r;
    }
    resid /= static_cast<double>(n);
    CHECK(resid < 0.005);  // at least half of the 0.01 broadband noise variance removed
}

TEST_CASE("threshold gate opens at QRS complexes", "[denoise]") {
    AfEcgConfig cfg;
    cfg.duration_s = 30.0;
    cfg.heart_rate_bpm = 80.0;
    cfg.seed = 7;
    const auto rec = synth_af_ecg(cfg);
    const auto padded = pad_symmetric(rec.composite, 1u << 4);
    const auto dec = swt_decompose(padded.signal, load_wavelet("db6"), 4);

    // scale 3 spans 62.5-125 Hz where QRS slopes live
    const auto& d3 = dec.details[2];
    const auto track = moving_median_threshold(d3, 200.0, 1000.0);
    const auto mask = qrs_gate(d3, track, 1.5);

    std::size_t hit = 0;
    for (std::size_t peak : rec.r_peaks) {
        bool any = false;
        const std::size_t lo = peak >= 25 ? peak - 25 : 0;
        const std::size_t hi = std::min(mask.size(), peak + 26);
        for (std::size_t i = lo; i < hi; ++i) any = any || mask[i];
        hit += any;
    }
    REQUIRE(rec.r_peaks.size() >= 30);
    CHECK(static_cast<double>(hit) >= 0.9 * static_cast<double>(rec.r_peaks.size()));
}
