#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "pliwave/notch.hpp"
#include "pliwave/rng.hpp"
#include "pliwave/signal.hpp"

#include "support/helpers.hpp"

using namespace pliwave;
using Catch::Approx;

namespace {

double magnitude_db(const BiquadCascade& c, double hz) {
    return 20.0 * std::log10(frequency_response_magnitude(c, hz));
}

// bisect for the frequency where the response crosses -3 dB
double crossing_hz(const BiquadCascade& c, double lo, double hi) {
    auto above = [&](double f) { return magnitude_db(c, f) > -3.0103; };
    const bool lo_above = above(lo);
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (above(mid) == lo_above) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("fixed bandstop design centered at 50 Hz", "[notch]") {
    const auto c = design_butterworth_bandstop(50.0, 1.0, 1000.0);

    SECTION("deep rejection at the center, transparent elsewhere") {
        CHECK(magnitude_db(c, 50.0) < -40.0);
        CHECK(std::abs(magnitude_db(c, 0.0001)) < 0.1);
        CHECK(std::abs(magnitude_db(c, 100.0)) < 0.1);
        CHECK(std::abs(magnitude_db(c, 10.0)) < 0.1);
    }
    SECTION("half-power edges sit at the +-1 Hz band") {
        CHECK(std::abs(crossing_hz(c, 45.0, 49.999) - 49.0) < 0.05);
        CHECK(std::abs(crossing_hz(c, 50.001, 55.0) - 51.0) < 0.05);
    }
    SECTION("stable poles") {
        CHECK(is_stable(c));
    }
    SECTION("section count matches the analog order") {
        CHECK(c.sections.size() == 2);  // order-2 prototype -> 4 poles -> 2 biquads
    }
    SECTION("invalid bands rejected") {
        REQUIRE_THROWS_AS(design_butterworth_bandstop(50.0, 0.0, 1000.0), std::invalid_argument);
        REQUIRE_THROWS_AS(design_butterworth_bandstop(50.0, 60.0, 100.0), std::invalid_argument);
        REQUIRE_THROWS_AS(design_butterworth_bandstop(0.0, 1.0, 1000.0), std::invalid_argument);
        REQUIRE_THROWS_AS(design_butterworth_bandstop(50.0, 1.0, 1000.0, 0), std::invalid_argument);
    }
}

TEST_CASE("bandpass design used by the R-peak detector", "[notch]") {
    const auto c = design_butterworth_bandpass(5.0, 25.0, 1000.0);
    SECTION("passband flat, stopband falls away") {
        CHECK(std::abs(magnitude_db(c, 12.0)) < 0.5);
        CHECK(magnitude_db(c, 0.5) < -20.0);
        CHECK(magnitude_db(c, 100.0) < -20.0);
    }
    SECTION("half-power edges at the design band") {
        CHECK(std::abs(crossing_hz(c, 1.0, 12.0) - 5.0) < 0.05);
        CHECK(std::abs(crossing_hz(c, 12.0, 60.0) - 25.0) < 0.05);
    }
    SECTION("stable") { CHECK(is_stable(c)); }
}

TEST_CASE("filter_signal applies the cascade causally", "[notch]") {
    const auto c = design_butterworth_bandstop(50.0, 1.0, 1000.0);

    SECTION("zeros map to zeros") {
        const auto out = filter_signal(c, make_signal(std::vector<double>(100, 0.0), 1000.0));
        CHECK(testsupport::max_abs(out.samples) == 0.0);
    }
    SECTION("steady-state 50 Hz suppression and 5 Hz transparency") {
        const std::size_t n = 10000;
        const auto in50 = make_signal(testsupport::make_tone(n, 1000.0, 50.0), 1000.0);
        const auto out50 = filter_signal(c, in50);
        std::vector<double> tail(out50.samples.begin() + 5000, out50.samples.end());
        CHECK(testsupport::sine_fit_amplitude(tail, 1000.0, 50.0) < 0.01);

        const auto in5 = make_signal(testsupport::make_tone(n, 1000.0, 5.0), 1000.0);
        const auto out5 = filter_signal(c, in5);
        std::vector<double> tail5(out5.samples.begin() + 5000, out5.samples.end());
        CHECK(testsupport::sine_fit_amplitude(tail5, 1000.0, 5.0) == Approx(1.0).epsilon(0.01));
    }
    SECTION("linearity") {
        Rng rng(6);
        std::vector<double> a(512), b(512), mixed(512);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.uniform(-1.0, 1.0);
            b[i] = rng.uniform(-1.0, 1.0);
            mixed[i] = 2.0 * a[i] + 0.5 * b[i];
        }
        const auto fa = filter_signal(c, make_signal(a, 1000.0));
        const auto fb = filter_signal(c, make_signal(b, 1000.0));
        const auto fm = filter_signal(c, make_signal(mixed, 1000.0));
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            worst = std::max(worst,
                             std::abs(fm.samples[i] - 2.0 * fa.samples[i] - 0.5 * fb.samples[i]));
        CHECK(worst < 1e-9);
    }
    SECTION("sample-rate mismatch rejected") {
        REQUIRE_THROWS_AS(filter_signal(c, make_signal({1.0, 2.0}, 500.0)), std::invalid_argument);
    }
    SECTION("annotations carried through") {
        auto s = make_signal(std::vector<double>(100, 1.0), 1000.0);
        s.annotations = {10, 20};
        CHECK(filter_signal(c, s).annotations == s.annotations);
    }
}

TEST_CASE("dump_coefficients prints parseable full-precision sections", "[notch]") {
    const auto c = design_butterworth_bandstop(50.0, 1.0, 1000.0);
    const std::string text = dump_coefficients(c);
    CHECK(text.find("section") != std::string::npos);

    // every printed number must round-trip to the stored coefficient
    std::istringstream in(text);
    std::string line;
    std::size_t section = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        REQUIRE(section < c.sections.size());
        std::size_t idx = 0;
        double b0, b1, b2, a1, a2;
        const int got = std::sscanf(line.c_str(), "%zu %lf %lf %lf %lf %lf",
                                    &idx, &b0, &b1, &b2, &a1, &a2);
        REQUIRE(got == 6);
        CHECK(idx == section);
        CHECK(b0 == c.sections[section].b0);
        CHECK(b1 == c.sections[section].b1);
        CHECK(b2 == c.sections[section].b2);
        CHECK(a1 == c.sections[section].a1);
        CHECK(a2 == c.sections[section].a2);
        ++section;
    }
    CHECK(section == c.sections.size());
}

TEST_CASE("adaptive harmonic canceller", "[notch]") {
    AdaptiveNotchConfig cfg;  // defaults: mu = 0.01, 50 Hz, 5 harmonics

    SECTION("zero input, zero output") {
        const auto out = adaptive_notch(make_signal(std::vector<double>(1000, 0.0), 1000.0), cfg);
        CHECK(testsupport::max_abs(out.samples) == 0.0);
    }
    SECTION("converges on a stationary 50 Hz tone") {
        const std::size_t n = 60000;
        const auto in = make_signal(testsupport::make_tone(n, 1000.0, 50.0), 1000.0);
        const auto out = adaptive_notch(in, cfg);
        const double tail_power = power_over_range(out.samples, n - 10000, n);
        const double in_power = power(in);
        CHECK(tail_power <= in_power / 1000.0);
    }
    SECTION("cancels harmonics up to the configured count") {
        const std::size_t n = 60000;
        const auto in = make_signal(testsupport::make_tone(n, 1000.0, 150.0), 1000.0);
        const auto out = adaptive_notch(in, cfg);
        CHECK(power_over_range(out.samples, n - 10000, n) <= 0.01 * power(in));

        AdaptiveNotchConfig narrow = cfg;
        narrow.harmonic_count = 2;  // 50 and 100 Hz only; 150 Hz passes
        const auto kept = adaptive_notch(in, narrow);
        CHECK(power_over_range(kept.samples, n - 10000, n) >= 0.5 * power(in));
    }
    SECTION("scaling equivariance") {
        Rng rng(12);
        std::vector<double> x(4000);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::sin(2.0 * std::numbers::pi * 50.0 * static_cast<double>(i) / 1000.0) +
                   0.3 * rng.gaussian();
        auto scaled = x;
        for (auto& v : scaled) v *= 4.0;
        const auto base = adaptive_notch(make_signal(x, 1000.0), cfg);
        const auto big = adaptive_notch(make_signal(scaled, 1000.0), cfg);
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max(worst, std::abs(big.samples[i] - 4.0 * base.samples[i]));
        CHECK(worst < 1e-9);
    }
    SECTION("long-run stability: ten minutes of mixed input stays bounded") {
        Rng rng(31);
        const std::size_t n = 600000;
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / 1000.0;
            x[i] = std::sin(2.0 * std::numbers::pi * 50.0 * t) + 0.5 * rng.gaussian();
        }
        const auto out = adaptive_notch(make_signal(x, 1000.0), cfg);
        bool all_finite = true;
        double worst = 0.0;
        for (double v : out.samples) {
            all_finite = all_finite && std::isfinite(v);
            worst = std::max(worst, std::abs(v));
        }
        CHECK(all_finite);
        CHECK(worst < 10.0 * testsupport::max_abs(x));
    }
    SECTION("configuration validation") {
        AdaptiveNotchConfig bad = cfg;
        bad.step_size = 0.0;
        REQUIRE_THROWS_AS(adaptive_notch(make_signal({1.0, 2.0}, 1000.0), bad),
                          std::invalid_argument);
        bad = cfg;
        bad.step_size = 1.0;
        REQUIRE_THROWS_AS(adaptive_notch(make_signal({1.0, 2.0}, 1000.0), bad),
                          std::invalid_argument);
        bad = cfg;
        bad.fundamental_hz = 150.0;  // 5th harmonic would sit at 750 Hz, above Nyquist
        REQUIRE_THROWS_AS(adaptive_notch(make_signal({1.0, 2.0}, 1000.0), bad),
                          std::invalid_argument);
        auto nan_in = make_signal({1.0, std::nan("")}, 1000.0);
        REQUIRE_THROWS_AS(adaptive_notch(nan_in, cfg), std::invalid_argument);
    }
}
