#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pliwave/signal.hpp"
#include "pliwave/synthesis.hpp"

#include "support/helpers.hpp"

using namespace pliwave;
using Catch::Approx;

namespace {

std::vector<double> rr_intervals_s(const std::vector<std::size_t>& peaks, double fs) {
    std::vector<double> rr;
    for (std::size_t i = 1; i < peaks.size(); ++i)
        rr.push_back(static_cast<double>(peaks[i] - peaks[i - 1]) / fs);
    return rr;
}

}  // namespace

TEST_CASE("ventricular track beats at the configured rate", "[synthesis]") {
    AfEcgConfig cfg;
    cfg.duration_s = 60.0;
    cfg.heart_rate_bpm = 60.0;
    cfg.rr_variability = 0.0;
    cfg.seed = 3;

    SECTION("60 bpm for 60 s yields 60 evenly spaced beats") {
        const auto track = synth_ventricular(cfg);
        REQUIRE(track.signal.size() == 60000);
        const auto& peaks = track.r_peaks;
        REQUIRE(peaks.size() == 60);
        const auto rr = rr_intervals_s(peaks, 1000.0);
        for (double v : rr) CHECK(v == Approx(1.0).margin(0.002));
    }
    SECTION("80 bpm mean RR is 750 ms") {
        cfg.heart_rate_bpm = 80.0;
        const auto track = synth_ventricular(cfg);
        const auto rr = rr_intervals_s(track.r_peaks, 1000.0);
        REQUIRE(!rr.empty());
        double mean = 0.0;
        for (double v : rr) mean += v;
        mean /= static_cast<double>(rr.size());
        CHECK(mean == Approx(0.75).margin(0.002));
    }
    SECTION("RR variability stays inside the configured band and actually varies") {
        cfg.heart_rate_bpm = 100.0;
        cfg.rr_variability = 0.25;
        const auto track = synth_ventricular(cfg);
        const auto rr = rr_intervals_s(track.r_peaks, 1000.0);
        REQUIRE(rr.size() >= 60);
        const double mean_rr = 0.6;
        double lo = 1e9, hi = 0.0;
        for (double v : rr) {
            REQUIRE(v >= 0.75 * mean_rr - 0.01);
            REQUIRE(v <= 1.25 * mean_rr + 0.01);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi - lo > 0.05);  // irregular, not metronomic
    }
    SECTION("annotated peaks are local maxima and the median peak hits 1 mV") {
        const auto track = synth_ventricular(cfg);
        std::vector<double> heights;
        for (std::size_t p : track.r_peaks) {
            const std::size_t lo = p - 10, hi = p + 10;
            double best = -1e9;
            std::size_t arg = lo;
            for (std::size_t i = lo; i <= hi; ++i)
                if (track.signal.samples[i] > best) {
                    best = track.signal.samples[i];
                    arg = i;
                }
            CHECK(arg == p);
            heights.push_back(best);
        }
        std::nth_element(heights.begin(), heights.begin() + heights.size() / 2, heights.end());
        CHECK(heights[heights.size() / 2] == Approx(1.0).margin(1e-9));
    }
    SECTION("r_amplitude rescales so the median annotated peak matches") {
        cfg.r_amplitude_mv = 2.5;
        const auto track = synth_ventricular(cfg);
        std::vector<double> heights;
        for (std::size_t p : track.r_peaks) heights.push_back(track.signal.samples[p]);
        REQUIRE(!heights.empty());
        std::nth_element(heights.begin(), heights.begin() + heights.size() / 2, heights.end());
        CHECK(heights[heights.size() / 2] == Approx(2.5).margin(1e-9));
        // settling of the beat-shape state can push isolated peaks above the median
        double top = 0.0;
        for (double v : track.signal.samples) top = std::max(top, v);
        CHECK(top >= 2.5 - 1e-9);
        CHECK(top <= 2.5 * 1.15);
    }
    SECTION("deterministic per seed, distinct across seeds") {
        const auto a = synth_ventricular(cfg);
        const auto b = synth_ventricular(cfg);
        REQUIRE(a.signal.samples == b.signal.samples);
        cfg.seed = 4;
        cfg.rr_variability = 0.1;
        const auto c = synth_ventricular(cfg);
        AfEcgConfig cfg2 = cfg;
        cfg2.seed = 5;
        const auto d = synth_ventricular(cfg2);
        CHECK(c.r_peaks != d.r_peaks);
    }
    SECTION("config validation") {
        cfg.heart_rate_bpm = 300.0;
        REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg.heart_rate_bpm = 80.0;
        cfg.rr_variability = 0.5;
        REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}

TEST_CASE("fibrillatory baseline", "[synthesis]") {
    AfEcgConfig cfg;
    cfg.duration_s = 20.0;
    cfg.seed = 11;

    SECTION("zero amplitude produces silence") {
        cfg.fwave_amplitude_uv = 0.0;
        const auto f = synth_fwaves(cfg);
        CHECK(testsupport::max_abs(f.samples) == 0.0);
    }
    SECTION("peak-to-peak equals twice the configured amplitude exactly") {
        cfg.fwave_amplitude_uv = 75.0;
        const auto f = synth_fwaves(cfg);
        const auto [lo, hi] = std::minmax_element(f.samples.begin(), f.samples.end());
        CHECK(*hi - *lo == Approx(0.150).margin(1e-12));
    }
    SECTION("a pinned fundamental shows up as the dominant frequency") {
        cfg.fwave_fundamental_hz = 6.0;
        cfg.fwave_fm_deviation_hz = 0.0;
        const auto f = synth_fwaves(cfg);
        const double peak = testsupport::dominant_frequency(f.samples, 1000.0, 2.0, 12.0);
        CHECK(peak == Approx(6.0).margin(0.1));
    }
    SECTION("drawn fundamentals stay inside the clamp band across seeds") {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            cfg.seed = seed;
            const auto f = synth_fwaves(cfg);
            const double peak = testsupport::dominant_frequency(f.samples, 1000.0, 1.5, 11.0);
            INFO("seed " << seed);
            REQUIRE(peak > 2.8);
            REQUIRE(peak < 9.2);
        }
    }
}

TEST_CASE("composite AF record is the sum of its parts", "[synthesis]") {
    AfEcgConfig cfg;
    cfg.duration_s = 15.0;
    cfg.heart_rate_bpm = 80.0;
    cfg.seed = 21;
    const auto rec = synth_af_ecg(cfg);

    REQUIRE(rec.composite.size() == rec.ventricular.size());
    REQUIRE(rec.composite.size() == rec.atrial.size());
    for (std::size_t i = 0; i < rec.composite.size(); ++i)
        REQUIRE(rec.composite.samples[i] == rec.ventricular.samples[i] + rec.atrial.samples[i]);
    CHECK(rec.composite.annotations == rec.r_peaks);
    CHECK(testsupport::max_abs(rec.noise.samples) == 0.0);
}

TEST_CASE("interference generator", "[synthesis]") {
    PliConfig cfg;
    cfg.duration_s = 20.0;
    cfg.seed = 5;

    SECTION("deterministic per seed") {
        const auto a = synth_pli(cfg);
        const auto b = synth_pli(cfg);
        REQUIRE(a.samples == b.samples);
        PliConfig other = cfg;
        other.seed = 6;
        CHECK(synth_pli(other).samples != a.samples);
    }
    SECTION("harmonic power split approximates the configured fractions") {
        const auto x = synth_pli(cfg);
        const double p1 = testsupport::band_power(x.samples, 1000.0, 50.0, 3.0);
        const double p2 = testsupport::band_power(x.samples, 1000.0, 100.0, 3.0);
        const double p3 = testsupport::band_power(x.samples, 1000.0, 150.0, 3.0);
        const double p4 = testsupport::band_power(x.samples, 1000.0, 200.0, 3.0);
        const double p5 = testsupport::band_power(x.samples, 1000.0, 250.0, 3.0);
        CHECK(p2 / p1 == Approx(0.02).epsilon(0.15));
        CHECK(p3 / p1 == Approx(0.05).epsilon(0.15));
        CHECK(p4 / p1 == Approx(0.01).epsilon(0.15));
        CHECK(p5 / p1 == Approx(0.06).epsilon(0.15));
    }
    SECTION("frequency track stays within the one-percent wander cap") {
        const auto track = instantaneous_frequency_track(cfg);
        REQUIRE(track.size() == 20000);
        for (double f : track.samples) {
            REQUIRE(f >= 49.5 - 1e-9);
            REQUIRE(f <= 50.5 + 1e-9);
        }
    }
    SECTION("degenerate configuration collapses to a pure 50 Hz tone") {
        cfg.fluctuations_enabled = false;
        cfg.harmonics_enabled = false;
        const auto x = synth_pli(cfg);
        const double peak = testsupport::dominant_frequency(x.samples, 1000.0, 45.0, 55.0);
        CHECK(peak == Approx(50.0).margin(0.01));
        const double rms = testsupport::rms(x.samples);
        CHECK(rms == Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));
    }
    SECTION("amp-varying: silent lead-in, then envelope modulation") {
        cfg.scenario = PliScenario::amp_varying;
        cfg.am_rate_hz = 1.3;
        const auto x = synth_pli(cfg);
        for (std::size_t i = 0; i < 10000; ++i) REQUIRE(x.samples[i] == 0.0);
        CHECK(power_over_range(x.samples, 10000, x.size()) > 0.0);

        // recover the envelope rate from the rectified active region
        std::vector<double> env;
        for (std::size_t i = 10000; i < x.size(); ++i) env.push_back(std::abs(x.samples[i]));
        const double mean = [&] {
            double s = 0.0;
            for (double v : env) s += v;
            return s / static_cast<double>(env.size());
        }();
        for (auto& v : env) v -= mean;
        const double rate = testsupport::dominant_frequency(env, 1000.0, 0.3, 3.0);
        CHECK(rate == Approx(1.3).margin(0.1));
    }
    SECTION("amp-varying default envelope rates stay in the drawn band") {
        cfg.scenario = PliScenario::amp_varying;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            cfg.seed = seed;
            const auto x = synth_pli(cfg);
            std::vector<double> env;
            for (std::size_t i = 10000; i < x.size(); ++i) env.push_back(std::abs(x.samples[i]));
            double mean = 0.0;
            for (double v : env) mean += v;
            mean /= static_cast<double>(env.size());
            for (auto& v : env) v -= mean;
            const double rate = testsupport::dominant_frequency(env, 1000.0, 0.2, 3.0);
            INFO("seed " << seed);
            REQUIRE(rate > 0.38);
            REQUIRE(rate < 2.15);
        }
    }
    SECTION("freq-dev: a pinned offset moves the fundamental and its harmonics") {
        cfg.scenario = PliScenario::freq_dev;
        cfg.freq_offset_hz = 2.5;
        const auto x = synth_pli(cfg);
        const double f1 = testsupport::dominant_frequency(x.samples, 1000.0, 48.0, 58.0);
        CHECK(f1 == Approx(52.5).margin(0.8));
        const double f3 = testsupport::dominant_frequency(x.samples, 1000.0, 150.0, 165.0);
        CHECK(f3 == Approx(157.5).margin(2.0));
        const auto track = instantaneous_frequency_track(cfg);
        for (double f : track.samples) {
            REQUIRE(f >= 52.5 * 0.99 - 1e-9);
            REQUIRE(f <= 52.5 * 1.01 + 1e-9);
        }
    }
    SECTION("freq-dev default draws stay within +-3 Hz of nominal") {
        cfg.scenario = PliScenario::freq_dev;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            cfg.seed = seed;
            const auto track = instantaneous_frequency_track(cfg);
            double mean = 0.0;
            for (double f : track.samples) mean += f;
            mean /= static_cast<double>(track.size());
            INFO("seed " << seed);
            REQUIRE(mean > 50.0 - 3.6);
            REQUIRE(mean < 50.0 + 3.6);
        }
    }
    SECTION("validation") {
        cfg.scenario = PliScenario::amp_varying;
        cfg.onset_s = 25.0;  // beyond the 20 s record
        REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg = PliConfig{};
        cfg.max_freq_fraction = -0.1;
        REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SECTION("scenario names round-trip") {
        for (PliScenario s :
             {PliScenario::common, PliScenario::amp_varying, PliScenario::freq_dev}) {
            CHECK(parse_scenario(scenario_name(s)) == s);
        }
        REQUIRE_THROWS_AS(parse_scenario("odd"), std::invalid_argument);
    }
}

TEST_CASE("calibrated record pairs", "[synthesis]") {
    AfEcgConfig ecg;
    ecg.duration_s = 20.0;
    ecg.seed = 31;
    PliConfig pli;
    pli.duration_s = 20.0;
    pli.seed = 31;

    SECTION("infinite SNR returns the clean record") {
        const auto pair = synth_noise_free_pair(ecg, pli, SnrDb::infinite());
        CHECK(pair.noisy.composite.samples == pair.clean.composite.samples);
    }
    SECTION("0 dB equalizes full-record powers for the common scenario") {
        const auto pair = synth_noise_free_pair(ecg, pli, SnrDb::of(0.0));
        const double p_clean = power(pair.clean.composite);
        const double p_noise = power(pair.noisy.noise);
        CHECK(10.0 * std::log10(p_clean / p_noise) == Approx(0.0).margin(1e-9));
    }
    SECTION("amp-varying calibrates over the active region only") {
        pli.scenario = PliScenario::amp_varying;
        pli.onset_s = 10.0;
        const auto pair = synth_noise_free_pair(ecg, pli, SnrDb::of(0.0));
        const std::size_t onset = 10000;
        const double p_clean = power_over_range(pair.clean.composite.samples, onset, 20000);
        const double p_noise = power_over_range(pair.noisy.noise.samples, onset, 20000);
        CHECK(10.0 * std::log10(p_clean / p_noise) == Approx(0.0).margin(1e-9));
        // the lead-in itself must stay silent
        CHECK(power_over_range(pair.noisy.noise.samples, 0, onset) == 0.0);
    }
    SECTION("geometry mismatch rejected") {
        pli.duration_s = 30.0;
        REQUIRE_THROWS_AS(synth_noise_free_pair(ecg, pli, SnrDb::of(0.0)), std::invalid_argument);
    }
}
