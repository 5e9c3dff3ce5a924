#pragma once

// Command-line surface. cli_main is a plain function over argv-style
// arguments so the test suite can drive every subcommand in-process; the
// tools/ binary is a two-line wrapper around it.
//
// Exit codes: 0 success, 1 usage error (bad flags or flag values), 2 data
// error (unreadable/malformed files, failing runs).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pliwave/csv.hpp"
#include "pliwave/denoise.hpp"
#include "pliwave/evaluation.hpp"
#include "pliwave/harness.hpp"
#include "pliwave/notch.hpp"
#include "pliwave/signal.hpp"
#include "pliwave/synthesis.hpp"

namespace pliwave {

namespace detail {

// File-content problems must surface as data errors (exit 2), not usage
// errors, so config/CSV parse failures are rethrown as runtime errors.
template <typename Fn>
auto as_data_error(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(e.what());
    }
}

inline std::filesystem::path derived_output_path(const std::filesystem::path& input,
                                                 const std::string& out_dir, const char* tag) {
    std::filesystem::path base = input.stem();
    base += std::string(".") + tag + ".csv";
    return out_dir.empty() ? input.parent_path() / base : std::filesystem::path(out_dir) / base;
}

}  // namespace detail

inline int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"ECG powerline-interference denoising toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    auto* seed_opt = app.add_option("--seed", seed, "master seed for all random draws");
    app.add_option("--config", config_path, "plan config file (used by bench)");
    app.add_option("--out", out_dir, "output directory (default: alongside input / cwd)");
    app.add_option("--jobs", jobs, "worker threads (results independent of the count)")
        ->check(CLI::PositiveNumber);

    // synth-ecg
    auto* synth_ecg = app.add_subcommand("synth-ecg", "synthesize an AF ECG record");
    synth_ecg->fallthrough();
    AfEcgConfig ecg_cfg;
    double fwave_hz = 0.0;
    bool components = false;
    synth_ecg->add_option("--duration", ecg_cfg.duration_s, "record length in seconds");
    synth_ecg->add_option("--fs", ecg_cfg.sample_rate_hz, "sampling rate in Hz");
    synth_ecg->add_option("--heart-rate", ecg_cfg.heart_rate_bpm, "mean heart rate in bpm");
    synth_ecg->add_option("--rr-variability", ecg_cfg.rr_variability,
                          "per-beat RR deviation as a fraction of the mean");
    synth_ecg->add_option("--fwave-uv", ecg_cfg.fwave_amplitude_uv, "f-wave peak amplitude in uV");
    auto* fwave_hz_opt =
        synth_ecg->add_option("--fwave-hz", fwave_hz, "f-wave fundamental (default: drawn)");
    synth_ecg->add_flag("--components", components, "also write ventricular/atrial tracks");

    // synth-pli
    auto* synth_pli_cmd = app.add_subcommand("synth-pli", "synthesize powerline interference");
    synth_pli_cmd->fallthrough();
    PliConfig pli_cfg;
    std::string scenario_str = "common";
    double freq_offset = 0.0, am_rate = 0.0;
    bool no_harmonics = false, no_fluctuations = false, freq_track = false;
    synth_pli_cmd->add_option("--scenario", scenario_str, "common | amp-varying | freq-dev");
    synth_pli_cmd->add_option("--duration", pli_cfg.duration_s, "record length in seconds");
    synth_pli_cmd->add_option("--fs", pli_cfg.sample_rate_hz, "sampling rate in Hz");
    synth_pli_cmd->add_option("--fundamental", pli_cfg.fundamental_hz, "nominal mains frequency");
    synth_pli_cmd->add_option("--onset", pli_cfg.onset_s, "amp-varying scenario onset in seconds");
    auto* freq_offset_opt = synth_pli_cmd->add_option(
        "--freq-offset", freq_offset, "freq-dev scenario offset in Hz (default: drawn)");
    auto* am_rate_opt = synth_pli_cmd->add_option(
        "--am-rate", am_rate, "amp-varying envelope rate in Hz (default: drawn)");
    synth_pli_cmd->add_flag("--no-harmonics", no_harmonics, "fundamental only");
    synth_pli_cmd->add_flag("--no-fluctuations", no_fluctuations, "freeze frequency and amplitude");
    synth_pli_cmd->add_flag("--freq-track", freq_track, "also write the mains-frequency track");

    // denoise
    auto* denoise_cmd = app.add_subcommand("denoise", "denoise a CSV record");
    denoise_cmd->fallthrough();
    std::string method_str, input_path;
    double input_fs = 1000.0;
    DenoiserSpec spec;
    denoise_cmd->add_option("--method", method_str, "denoising method")->required();
    denoise_cmd->add_option("--input", input_path, "input CSV record")->required();
    denoise_cmd->add_option("--fs", input_fs, "sampling rate of the input in Hz");
    denoise_cmd->add_option("--wavelet", spec.wavelet, "wavelet family (e.g. db6, sym8)");
    denoise_cmd->add_option("--levels", spec.levels, "decomposition levels (0 = from rate)");
    denoise_cmd->add_option("--window-ms", spec.window_ms, "moving-median window in ms");
    denoise_cmd->add_option("--threshold-scale", spec.threshold_scale,
                            "median-to-threshold gain on the deepest detail scale");
    denoise_cmd->add_option("--mixture-scale", spec.mixture_threshold_scale,
                            "median-to-threshold gain on the shallower detail scales");
    denoise_cmd->add_option("--gate-factor", spec.qrs_gate_factor,
                            "upper-branch gate of the hybrid rule");
    denoise_cmd->add_option("--notch-center", spec.notch_center_hz, "notch center in Hz");
    denoise_cmd->add_option("--notch-half-bw", spec.notch_half_bandwidth_hz,
                            "notch half bandwidth in Hz");
    denoise_cmd->add_option("--mu", spec.adaptive_step_size, "adaptive notch step size");
    denoise_cmd->add_option("--harmonics", spec.adaptive_harmonics,
                            "adaptive notch harmonic count");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a denoised record against a clean one");
    eval_cmd->fallthrough();
    std::string clean_path, denoised_path, ann_path;
    double eval_fs = 1000.0;
    bool keep_edges = false;
    eval_cmd->add_option("--clean", clean_path, "clean reference CSV")->required();
    eval_cmd->add_option("--denoised", denoised_path, "denoised CSV")->required();
    eval_cmd->add_option("--fs", eval_fs, "sampling rate in Hz");
    eval_cmd->add_option("--annotations", ann_path, "R-peak sidecar (default: detect on clean)");
    eval_cmd->add_flag("--keep-edge-beats", keep_edges, "include first/last beat in interval scores");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run an experiment plan");
    bench_cmd->fallthrough();

    // notch-design
    auto* notch_cmd = app.add_subcommand("notch-design", "print band-stop biquad coefficients");
    notch_cmd->fallthrough();
    double nd_center = 50.0, nd_half_bw = 1.0, nd_fs = 1000.0;
    int nd_order = 2;
    notch_cmd->add_option("--center", nd_center, "center frequency in Hz");
    notch_cmd->add_option("--half-bw", nd_half_bw, "half bandwidth in Hz");
    notch_cmd->add_option("--fs", nd_fs, "sampling rate in Hz");
    notch_cmd->add_option("--order", nd_order, "analog prototype order")->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("pliwave");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const std::filesystem::path out_base = out_dir.empty() ? "." : out_dir;
    try {
        if (*synth_ecg) {
            ecg_cfg.seed = seed;
            if (fwave_hz_opt->count()) ecg_cfg.fwave_fundamental_hz = fwave_hz;
            const GeneratedRecord rec = synth_af_ecg(ecg_cfg);
            std::filesystem::create_directories(out_base);
            std::vector<std::string> echo = {"seed=" + std::to_string(seed),
                                             "duration_s=" + format_double(ecg_cfg.duration_s),
                                             "sample_rate_hz=" + format_double(ecg_cfg.sample_rate_hz),
                                             "heart_rate_bpm=" + format_double(ecg_cfg.heart_rate_bpm),
                                             "fwave_amplitude_uv=" + format_double(ecg_cfg.fwave_amplitude_uv)};
            write_signal_csv(out_base / "ecg.csv", rec.composite, echo);
            write_annotations(out_base / "ecg.ann", rec.r_peaks);
            if (components) {
                write_signal_csv(out_base / "ecg.ventricular.csv", rec.ventricular, echo);
                write_signal_csv(out_base / "ecg.atrial.csv", rec.atrial, echo);
            }
            std::cout << "wrote " << (out_base / "ecg.csv").string() << " ("
                      << rec.composite.size() << " samples, " << rec.r_peaks.size() << " beats)\n";
            return 0;
        }
        if (*synth_pli_cmd) {
            pli_cfg.seed = seed;
            pli_cfg.scenario = parse_scenario(scenario_str);
            pli_cfg.harmonics_enabled = !no_harmonics;
            pli_cfg.fluctuations_enabled = !no_fluctuations;
            if (freq_offset_opt->count()) pli_cfg.freq_offset_hz = freq_offset;
            if (am_rate_opt->count()) pli_cfg.am_rate_hz = am_rate;
            const Signal pli = synth_pli(pli_cfg);
            std::filesystem::create_directories(out_base);
            const std::vector<std::string> echo = {"seed=" + std::to_string(seed),
                                                   "scenario=" + scenario_str,
                                                   "duration_s=" + format_double(pli_cfg.duration_s),
                                                   "sample_rate_hz=" + format_double(pli_cfg.sample_rate_hz),
                                                   "fundamental_hz=" + format_double(pli_cfg.fundamental_hz)};
            write_signal_csv(out_base / "pli.csv", pli, echo);
            if (freq_track)
                write_signal_csv(out_base / "pli.freq.csv", instantaneous_frequency_track(pli_cfg), echo);
            std::cout << "wrote " << (out_base / "pli.csv").string() << " (" << pli.size()
                      << " samples)\n";
            return 0;
        }
        if (*denoise_cmd) {
            spec.method = parse_method(method_str);
            spec.validate();
            const Signal input = detail::as_data_error(
                [&] { return read_signal_csv(input_path, input_fs); });
            const Signal output = apply_method(input, spec);
            const auto out_path = detail::derived_output_path(input_path, out_dir, "denoised");
            if (!out_path.parent_path().empty())
                std::filesystem::create_directories(out_path.parent_path());
            write_signal_csv(out_path, output,
                             {"method=" + method_str, "fs=" + format_double(input_fs)});
            std::cout << "wrote " << out_path.string() << " (" << output.size() << " samples)\n";
            return 0;
        }
        if (*eval_cmd) {
            const Signal clean = detail::as_data_error(
                [&] { return read_signal_csv(clean_path, eval_fs); });
            const Signal denoised = detail::as_data_error(
                [&] { return read_signal_csv(denoised_path, eval_fs); });
            EvaluationOptions opts;
            opts.drop_edge_beats = !keep_edges;
            std::vector<std::size_t> peaks;
            if (!ann_path.empty())
                peaks = detail::as_data_error([&] { return read_annotations(ann_path); });
            else
                peaks = detail::as_data_error([&] { return detect_r_peaks(clean); });
            const EvaluationReport rep =
                detail::as_data_error([&] { return evaluate(clean, denoised, peaks, opts); });
            std::cout << "snr_out_db=" << format_double(rep.snr_out_db) << '\n'
                      << "asci_global_pct=" << format_double(rep.asci_global_pct) << '\n'
                      << "asci_tq_pct=" << format_double(rep.asci_tq_pct) << '\n'
                      << "asci_qrst_pct=" << format_double(rep.asci_qrst_pct) << '\n'
                      << "beat_count=" << rep.beat_count << '\n';
            return 0;
        }
        if (*bench_cmd) {
            if (config_path.empty()) {
                std::cerr << "bench: --config <plan file> is required\n";
                return 1;
            }
            ExperimentPlan plan = detail::as_data_error([&] { return parse_plan_file(config_path); });
            if (seed_opt->count()) plan.master_seed = seed;
            const ResultsTable table = run_plan(plan, jobs);
            std::filesystem::create_directories(out_base);
            const auto csv_path = out_base / (plan.name + ".results.csv");
            write_results_csv(csv_path, table);
            write_results_json(out_base / (plan.name + ".results.json"), table);
            write_results_long_csv(out_base / (plan.name + ".results.long.csv"), table);
            std::size_t failed = 0;
            for (const auto& r : table.rows)
                if (r.kind == "trial" && !r.error.empty()) ++failed;
            for (const auto& r : table.rows) {
                if (r.kind != "aggregate") continue;
                std::cout << "aggregate variant=" << r.variant << " method=" << r.method
                          << " scenario=" << r.scenario << " snr_in=" << format_double(r.snr_in_db);
                if (r.snr_out_db)
                    std::cout << " snr_out=" << format_double(*r.snr_out_db)
                              << " asci=" << format_double(*r.asci_global_pct)
                              << " asci_tq=" << format_double(*r.asci_tq_pct);
                if (!r.error.empty()) std::cout << " error=" << r.error;
                std::cout << '\n';
            }
            std::cout << "wrote " << csv_path.string() << " (" << table.rows.size() << " rows";
            if (failed > 0) std::cout << ", " << failed << " failed trials";
            std::cout << ")\n";
            return failed == 0 ? 0 : 2;
        }
        if (*notch_cmd) {
            const BiquadCascade cascade =
                design_butterworth_bandstop(nd_center, nd_half_bw, nd_fs, nd_order);
            std::cout << dump_coefficients(cascade);
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

inline int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

}  // namespace pliwave
