#pragma once

// Experiment orchestration: a plan describes a sweep over methods, PLI
// scenarios and input SNRs applied to a grid of synthesized AF records (or
// an ingested directory of CSV records); the runner populates one results
// row per (variant, method, scenario, snr, trial) plus one aggregate row per
// cell, with per-row error capture, and exports CSV / JSON / long-format
// tables with byte-stable formatting.
//
// Determinism: every random draw is seeded from the master seed and the
// cell coordinates alone, and each row has a preassigned slot in the output,
// so the worker count never changes a single output byte.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "pliwave/csv.hpp"
#include "pliwave/denoise.hpp"
#include "pliwave/evaluation.hpp"
#include "pliwave/rng.hpp"
#include "pliwave/signal.hpp"
#include "pliwave/synthesis.hpp"

namespace pliwave {

// ---------------------------------------------------------------------------
// Plan

struct ExperimentPlan {
    std::string name = "plan";
    std::uint64_t master_seed = 1;
    int trials = 20;
    bool drop_edge_beats = true;

    std::vector<Method> methods{Method::proposed_hybrid, Method::hard_minimax,
                                Method::soft_minimax,    Method::hyperbolic_minimax,
                                Method::notch_fixed,     Method::notch_adaptive};
    std::vector<PliScenario> scenarios{PliScenario::common};
    std::vector<double> snr_in_db{15.0, 10.0, 5.0, 0.0, -5.0, -10.0};

    // Synthesized-record grid (ignored when source_dir is set).
    double duration_s = 60.0;
    double sample_rate_hz = 1000.0;
    std::vector<double> heart_rates_bpm{80.0};
    std::vector<double> fwave_amplitudes_uv{75.0};

    // Ingested-record source; empty string means synthesize.
    std::string source_dir;
    double source_rate_hz = 0.0;  // 0: infer from each file's time column
    double resample_to_hz = 1000.0;

    DenoiserSpec denoiser;  // method field overwritten per cell

    void validate() const {
        if (name.empty()) throw std::invalid_argument("plan: name must not be empty");
        if (trials < 1) throw std::invalid_argument("plan: trials must be >= 1");
        if (methods.empty()) throw std::invalid_argument("plan: method list must not be empty");
        if (scenarios.empty()) throw std::invalid_argument("plan: scenario list must not be empty");
        if (snr_in_db.empty()) throw std::invalid_argument("plan: snr list must not be empty");
        for (double snr : snr_in_db)
            if (!(snr >= -60.0 && snr <= 60.0))
                throw std::invalid_argument("plan: snr_in_db entries must lie in [-60, 60]");
        if (!(duration_s > 0.0)) throw std::invalid_argument("plan: duration must be positive");
        if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("plan: rate must be positive");
        if (heart_rates_bpm.empty()) throw std::invalid_argument("plan: heart rate list must not be empty");
        if (fwave_amplitudes_uv.empty())
            throw std::invalid_argument("plan: f-wave amplitude list must not be empty");
        if (!(resample_to_hz > 0.0)) throw std::invalid_argument("plan: resample target must be positive");
        if (source_rate_hz < 0.0) throw std::invalid_argument("plan: source rate must be non-negative");
        DenoiserSpec probe = denoiser;
        for (Method m : methods) {
            probe.method = m;
            probe.validate();
        }
    }
};

// ---------------------------------------------------------------------------
// Plan config files: flat `key = value` lines under [section] headers,
// '#' or ';' comments. Unknown sections or keys are errors so typos cannot
// silently fall back to defaults.

namespace detail {

inline std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= value.size(); ++i) {
        if (i == value.size() || value[i] == ',') {
            std::string item = trim_copy(std::string_view(value).substr(start, i - start));
            if (!item.empty()) items.push_back(std::move(item));
            start = i + 1;
        }
    }
    return items;
}

inline double parse_number(const std::string& value, const std::string& key) {
    double v;
    if (!parse_double(value, v)) throw std::invalid_argument("plan config: bad number for " + key);
    return v;
}

inline std::vector<double> parse_number_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_number(item, key));
    if (out.empty()) throw std::invalid_argument("plan config: empty list for " + key);
    return out;
}

inline bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "off" || value == "no") return false;
    throw std::invalid_argument("plan config: bad boolean for " + key);
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    std::uint64_t v{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        throw std::invalid_argument("plan config: bad unsigned integer for " + key);
    return v;
}

}  // namespace detail

inline ExperimentPlan parse_plan_text(const std::string& text) {
    ExperimentPlan plan;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = detail::trim_copy(line);
        if (t.empty() || t.front() == '#' || t.front() == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::invalid_argument("plan config line " + std::to_string(line_no) +
                                            ": unterminated section header");
            section = detail::trim_copy(std::string_view(t).substr(1, t.size() - 2));
            if (section != "plan" && section != "grid" && section != "source" &&
                section != "sweep" && section != "denoiser")
                throw std::invalid_argument("plan config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("plan config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = detail::trim_copy(std::string_view(t).substr(0, eq));
        const std::string value = detail::trim_copy(std::string_view(t).substr(eq + 1));
        const std::string qual = section.empty() ? key : section + "." + key;

        if (qual == "plan.name") plan.name = value;
        else if (qual == "plan.master_seed") plan.master_seed = detail::parse_u64(value, qual);
        else if (qual == "plan.trials") plan.trials = static_cast<int>(detail::parse_number(value, qual));
        else if (qual == "plan.drop_edge_beats") plan.drop_edge_beats = detail::parse_bool(value, qual);
        else if (qual == "grid.duration_s") plan.duration_s = detail::parse_number(value, qual);
        else if (qual == "grid.sample_rate_hz") plan.sample_rate_hz = detail::parse_number(value, qual);
        else if (qual == "grid.heart_rates_bpm") plan.heart_rates_bpm = detail::parse_number_list(value, qual);
        else if (qual == "grid.fwave_amplitudes_uv")
            plan.fwave_amplitudes_uv = detail::parse_number_list(value, qual);
        else if (qual == "source.directory") plan.source_dir = value;
        else if (qual == "source.sample_rate_hz") plan.source_rate_hz = detail::parse_number(value, qual);
        else if (qual == "source.resample_to_hz") plan.resample_to_hz = detail::parse_number(value, qual);
        else if (qual == "sweep.methods") {
            plan.methods.clear();
            for (const auto& item : detail::split_list(value)) plan.methods.push_back(parse_method(item));
        } else if (qual == "sweep.scenarios") {
            plan.scenarios.clear();
            for (const auto& item : detail::split_list(value)) plan.scenarios.push_back(parse_scenario(item));
        } else if (qual == "sweep.snr_in_db") plan.snr_in_db = detail::parse_number_list(value, qual);
        else if (qual == "denoiser.wavelet") plan.denoiser.wavelet = value;
        else if (qual == "denoiser.levels") plan.denoiser.levels = static_cast<int>(detail::parse_number(value, qual));
        else if (qual == "denoiser.window_ms") plan.denoiser.window_ms = detail::parse_number(value, qual);
        else if (qual == "denoiser.threshold_scale") plan.denoiser.threshold_scale = detail::parse_number(value, qual);
        else if (qual == "denoiser.mixture_threshold_scale")
            plan.denoiser.mixture_threshold_scale = detail::parse_number(value, qual);
        else if (qual == "denoiser.gate_factor") plan.denoiser.qrs_gate_factor = detail::parse_number(value, qual);
        else if (qual == "denoiser.notch_center_hz") plan.denoiser.notch_center_hz = detail::parse_number(value, qual);
        else if (qual == "denoiser.notch_half_bandwidth_hz")
            plan.denoiser.notch_half_bandwidth_hz = detail::parse_number(value, qual);
        else if (qual == "denoiser.adaptive_step_size")
            plan.denoiser.adaptive_step_size = detail::parse_number(value, qual);
        else if (qual == "denoiser.adaptive_harmonics")
            plan.denoiser.adaptive_harmonics = static_cast<int>(detail::parse_number(value, qual));
        else throw std::invalid_argument("plan config: unknown key '" + qual + "'");
    }
    plan.validate();
    return plan;
}

inline ExperimentPlan parse_plan_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open plan config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_plan_text(buf.str());
}

// ---------------------------------------------------------------------------
// Record ingestion

struct IngestedRecord {
    std::string name;
    Signal signal;  // annotations carry any sidecar R peaks, already resampled
};

struct IngestedSet {
    std::vector<IngestedRecord> records;
    std::vector<std::string> warnings;
};

// Loads every *.csv in a directory (each amplitude column is an independent
// record; a `<name>.ann` sidecar of sample indices applies to all columns of
// the file) and resamples to the target rate. Malformed files are skipped
// and reported in `warnings` so one bad export cannot abort a batch.
inline IngestedSet ingest_directory(const std::filesystem::path& dir, double source_rate_hz = 0.0,
                                    double resample_to_hz = 1000.0) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("ingest: not a directory: " + dir.string());
    if (!(resample_to_hz > 0.0)) throw std::invalid_argument("ingest: resample target must be positive");

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    IngestedSet set;
    if (files.empty()) {
        set.warnings.push_back("ingest: no .csv files in " + dir.string());
        return set;
    }

    for (const auto& file : files) {
        try {
            const CsvTable table = read_csv(file);
            double rate = source_rate_hz;
            if (rate <= 0.0) {
                if (!table.first_column_is_time || table.columns[0].size() < 2)
                    throw std::runtime_error("no time column and no source rate given");
                const auto& tcol = table.columns[0];
                rate = static_cast<double>(tcol.size() - 1) / (tcol.back() - tcol.front());
            }

            std::vector<std::size_t> ann;
            auto sidecar = file;
            sidecar.replace_extension(".ann");
            if (std::filesystem::exists(sidecar)) ann = read_annotations(sidecar);

            const std::size_t first = table.first_column_is_time ? 1 : 0;
            for (std::size_t c = first; c < table.columns.size(); ++c) {
                Signal s = make_signal(table.columns[c], rate);
                s.annotations = ann;
                std::sort(s.annotations.begin(), s.annotations.end());
                std::erase_if(s.annotations, [&](std::size_t a) { return a >= s.size(); });
                validate_signal(s, "ingest");
                Signal resampled = resample(s, resample_to_hz);

                std::string name = file.stem().string();
                if (table.columns.size() - first > 1) {
                    name += "-";
                    name += (c < table.column_names.size() && !table.column_names[c].empty())
                                ? table.column_names[c]
                                : "col" + std::to_string(c);
                }
                set.records.push_back({std::move(name), std::move(resampled)});
            }
        } catch (const std::exception& e) {
            set.warnings.push_back(file.filename().string() + ": " + e.what());
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Results table

struct ResultRow {
    std::string kind;  // "trial" or "aggregate"
    std::string plan;
    std::string variant;
    std::string method;
    std::string scenario;
    double snr_in_db = 0.0;
    long long trial = 0;  // trial index, or ok-trial count on aggregate rows
    std::optional<std::uint64_t> seed;
    std::optional<double> beat_count;
    std::optional<double> snr_out_db;
    std::optional<double> asci_global_pct;
    std::optional<double> asci_tq_pct;
    std::optional<double> asci_qrst_pct;
    std::optional<double> snr_out_db_std;
    std::optional<double> asci_global_pct_std;
    std::optional<double> asci_tq_pct_std;
    std::optional<double> asci_qrst_pct_std;
    std::string error;
};

struct ResultsTable {
    std::vector<std::string> comments;  // echoed into the CSV as '# ' lines
    std::vector<ResultRow> rows;
};

inline constexpr std::string_view kResultsSchemaComment = "results-schema v1";
inline constexpr std::string_view kResultsHeader =
    "row_kind,plan,variant,method,scenario,snr_in_db,trial,seed,beat_count,snr_out_db,"
    "asci_global_pct,asci_tq_pct,asci_qrst_pct,snr_out_db_std,asci_global_pct_std,"
    "asci_tq_pct_std,asci_qrst_pct_std,error";

namespace detail {

inline std::string sanitize_error(std::string msg) {
    for (char& c : msg) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return msg;
}

inline std::string format_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline std::string results_to_csv_string(const ResultsTable& table) {
    std::string out;
    out += "# ";
    out += kResultsSchemaComment;
    out += '\n';
    for (const auto& c : table.comments) {
        out += c.empty() ? "#" : "# " + c;
        out += '\n';
    }
    out += kResultsHeader;
    out += '\n';
    for (const auto& r : table.rows) {
        out += r.kind;
        out += ',' + r.plan + ',' + r.variant + ',' + r.method + ',' + r.scenario;
        out += ',' + format_double(r.snr_in_db);
        out += ',' + std::to_string(r.trial);
        out += ',';
        if (r.seed) out += std::to_string(*r.seed);
        out += ',' + detail::format_opt(r.beat_count);
        out += ',' + detail::format_opt(r.snr_out_db);
        out += ',' + detail::format_opt(r.asci_global_pct);
        out += ',' + detail::format_opt(r.asci_tq_pct);
        out += ',' + detail::format_opt(r.asci_qrst_pct);
        out += ',' + detail::format_opt(r.snr_out_db_std);
        out += ',' + detail::format_opt(r.asci_global_pct_std);
        out += ',' + detail::format_opt(r.asci_tq_pct_std);
        out += ',' + detail::format_opt(r.asci_qrst_pct_std);
        out += ',' + r.error;
        out += '\n';
    }
    return out;
}

inline void write_results_csv(const std::filesystem::path& path, const ResultsTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << results_to_csv_string(table);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline ResultsTable parse_results_csv(std::istream& in, const std::string& who) {
    ResultsTable table;
    std::string line;
    bool saw_schema = false, saw_header = false;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error(who + " line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string text = line.size() >= 2 && line[1] == ' ' ? line.substr(2) : line.substr(1);
            if (!saw_schema) {
                if (text != kResultsSchemaComment) fail("missing results-schema comment");
                saw_schema = true;
            } else {
                table.comments.push_back(std::move(text));
            }
            continue;
        }
        if (!saw_header) {
            if (line != kResultsHeader) fail("unexpected header");
            saw_header = true;
            continue;
        }
        const auto fields = detail::split_fields(line, ',');
        if (fields.size() != 18) fail("expected 18 fields, got " + std::to_string(fields.size()));
        ResultRow r;
        r.kind = std::string(fields[0]);
        if (r.kind != "trial" && r.kind != "aggregate") fail("bad row_kind '" + r.kind + "'");
        r.plan = std::string(fields[1]);
        r.variant = std::string(fields[2]);
        r.method = std::string(fields[3]);
        r.scenario = std::string(fields[4]);
        if (!parse_double(fields[5], r.snr_in_db)) fail("bad snr_in_db");
        {
            long long t{};
            const auto res = std::from_chars(fields[6].data(), fields[6].data() + fields[6].size(), t);
            if (res.ec != std::errc{} || res.ptr != fields[6].data() + fields[6].size()) fail("bad trial");
            r.trial = t;
        }
        if (!fields[7].empty()) {
            std::uint64_t s{};
            const auto res = std::from_chars(fields[7].data(), fields[7].data() + fields[7].size(), s);
            if (res.ec != std::errc{} || res.ptr != fields[7].data() + fields[7].size()) fail("bad seed");
            r.seed = s;
        }
        auto opt = [&](std::string_view f, const char* what) -> std::optional<double> {
            if (f.empty()) return std::nullopt;
            double v;
            if (!parse_double(f, v)) fail(std::string("bad ") + what);
            return v;
        };
        r.beat_count = opt(fields[8], "beat_count");
        r.snr_out_db = opt(fields[9], "snr_out_db");
        r.asci_global_pct = opt(fields[10], "asci_global_pct");
        r.asci_tq_pct = opt(fields[11], "asci_tq_pct");
        r.asci_qrst_pct = opt(fields[12], "asci_qrst_pct");
        r.snr_out_db_std = opt(fields[13], "snr_out_db_std");
        r.asci_global_pct_std = opt(fields[14], "asci_global_pct_std");
        r.asci_tq_pct_std = opt(fields[15], "asci_tq_pct_std");
        r.asci_qrst_pct_std = opt(fields[16], "asci_qrst_pct_std");
        r.error = std::string(fields[17]);
        table.rows.push_back(std::move(r));
    }
    if (!saw_schema || !saw_header) throw std::runtime_error(who + ": not a results CSV");
    return table;
}

inline ResultsTable parse_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_results_csv(in, path.string());
}

// JSON mirror of the CSV: same rows, same field names, null for empty cells.
inline nlohmann::ordered_json results_to_json(const ResultsTable& table) {
    nlohmann::ordered_json doc;
    doc["schema"] = std::string(kResultsSchemaComment);
    doc["comments"] = table.comments;
    auto& rows = doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
        nlohmann::ordered_json j;
        j["row_kind"] = r.kind;
        j["plan"] = r.plan;
        j["variant"] = r.variant;
        j["method"] = r.method;
        j["scenario"] = r.scenario;
        j["snr_in_db"] = r.snr_in_db;
        j["trial"] = r.trial;
        auto set_u64 = [&](const char* k, const std::optional<std::uint64_t>& v) {
            if (v) j[k] = *v; else j[k] = nullptr;
        };
        auto set = [&](const char* k, const std::optional<double>& v) {
            if (v) j[k] = *v; else j[k] = nullptr;
        };
        set_u64("seed", r.seed);
        set("beat_count", r.beat_count);
        set("snr_out_db", r.snr_out_db);
        set("asci_global_pct", r.asci_global_pct);
        set("asci_tq_pct", r.asci_tq_pct);
        set("asci_qrst_pct", r.asci_qrst_pct);
        set("snr_out_db_std", r.snr_out_db_std);
        set("asci_global_pct_std", r.asci_global_pct_std);
        set("asci_tq_pct_std", r.asci_tq_pct_std);
        set("asci_qrst_pct_std", r.asci_qrst_pct_std);
        j["error"] = r.error;
        rows.push_back(std::move(j));
    }
    return doc;
}

inline void write_results_json(const std::filesystem::path& path, const ResultsTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << results_to_json(table).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Plot-ready long format: one (metric, value) pair per row, empty cells
// dropped. Shares the row coordinates with the wide CSV.
inline std::string results_to_long_csv_string(const ResultsTable& table) {
    std::string out = "row_kind,plan,variant,method,scenario,snr_in_db,trial,metric,value\n";
    for (const auto& r : table.rows) {
        const std::string prefix = r.kind + ',' + r.plan + ',' + r.variant + ',' + r.method + ',' +
                                   r.scenario + ',' + format_double(r.snr_in_db) + ',' +
                                   std::to_string(r.trial) + ',';
        auto emit = [&](const char* metric, const std::optional<double>& v) {
            if (v) out += prefix + metric + ',' + format_double(*v) + '\n';
        };
        emit("beat_count", r.beat_count);
        emit("snr_out_db", r.snr_out_db);
        emit("asci_global_pct", r.asci_global_pct);
        emit("asci_tq_pct", r.asci_tq_pct);
        emit("asci_qrst_pct", r.asci_qrst_pct);
        emit("snr_out_db_std", r.snr_out_db_std);
        emit("asci_global_pct_std", r.asci_global_pct_std);
        emit("asci_tq_pct_std", r.asci_tq_pct_std);
        emit("asci_qrst_pct_std", r.asci_qrst_pct_std);
    }
    return out;
}

inline void write_results_long_csv(const std::filesystem::path& path, const ResultsTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << results_to_long_csv_string(table);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Runner

namespace detail {

struct PlanVariant {
    std::string name;
    double heart_rate_bpm = 80.0;
    double fwave_amplitude_uv = 75.0;
    const IngestedRecord* record = nullptr;  // non-null for ingested variants
};

inline std::string grid_variant_name(double hr, double fw) {
    std::ostringstream os;
    os << "hr" << format_double(hr) << "-fw" << format_double(fw);
    return os.str();
}

inline double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

inline double pop_std_of(const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

inline constexpr std::uint64_t kEcgSeedTag = 0xEC6;
inline constexpr std::uint64_t kPliSeedTag = 0x971;

}  // namespace detail

// Seed derivations are part of the output contract: records are identified
// by (master, variant, trial) and interference by (master, scenario, trial),
// never by scheduling order, so reruns and thread counts cannot change them.
// Sharing the interference seed across variants and methods means every
// method sees the same contaminated record within a cell.
inline std::uint64_t plan_record_seed(std::uint64_t master, std::size_t variant, long long trial) {
    return mix_seed(master ^ detail::kEcgSeedTag, variant, static_cast<std::uint64_t>(trial));
}
inline std::uint64_t plan_noise_seed(std::uint64_t master, std::size_t scenario, long long trial) {
    return mix_seed(master ^ detail::kPliSeedTag, scenario, static_cast<std::uint64_t>(trial));
}

inline std::vector<std::string> echo_plan(const ExperimentPlan& plan) {
    std::vector<std::string> out;
    auto kv = [&](const std::string& k, const std::string& v) { out.push_back(k + "=" + v); };
    kv("plan", plan.name);
    kv("master_seed", std::to_string(plan.master_seed));
    kv("trials", std::to_string(plan.trials));
    kv("drop_edge_beats", plan.drop_edge_beats ? "true" : "false");
    {
        std::string m;
        for (Method method : plan.methods) m += (m.empty() ? "" : ",") + std::string(method_name(method));
        kv("methods", m);
        std::string s;
        for (PliScenario sc : plan.scenarios) s += (s.empty() ? "" : ",") + std::string(scenario_name(sc));
        kv("scenarios", s);
        std::string q;
        for (double v : plan.snr_in_db) q += (q.empty() ? "" : ",") + format_double(v);
        kv("snr_in_db", q);
    }
    if (plan.source_dir.empty()) {
        kv("duration_s", format_double(plan.duration_s));
        kv("sample_rate_hz", format_double(plan.sample_rate_hz));
        std::string h;
        for (double v : plan.heart_rates_bpm) h += (h.empty() ? "" : ",") + format_double(v);
        kv("heart_rates_bpm", h);
        std::string f;
        for (double v : plan.fwave_amplitudes_uv) f += (f.empty() ? "" : ",") + format_double(v);
        kv("fwave_amplitudes_uv", f);
    } else {
        kv("source_dir", plan.source_dir);
        kv("resample_to_hz", format_double(plan.resample_to_hz));
    }
    kv("wavelet", plan.denoiser.wavelet);
    kv("levels", std::to_string(plan.denoiser.levels));
    kv("window_ms", format_double(plan.denoiser.window_ms));
    kv("threshold_scale", format_double(plan.denoiser.threshold_scale));
    kv("mixture_threshold_scale", format_double(plan.denoiser.mixture_threshold_scale));
    kv("gate_factor", format_double(plan.denoiser.qrs_gate_factor));
    kv("notch_center_hz", format_double(plan.denoiser.notch_center_hz));
    kv("notch_half_bandwidth_hz", format_double(plan.denoiser.notch_half_bandwidth_hz));
    kv("adaptive_step_size", format_double(plan.denoiser.adaptive_step_size));
    kv("adaptive_harmonics", std::to_string(plan.denoiser.adaptive_harmonics));
    return out;
}

inline ResultsTable run_plan(const ExperimentPlan& plan, int jobs = 1) {
    plan.validate();
    if (jobs < 1) throw std::invalid_argument("run_plan: jobs must be >= 1");

    // Resolve the record source before any work so a bad path fails fast.
    IngestedSet ingested;
    std::vector<detail::PlanVariant> variants;
    if (!plan.source_dir.empty()) {
        ingested = ingest_directory(plan.source_dir, plan.source_rate_hz, plan.resample_to_hz);
        if (ingested.records.empty())
            throw std::runtime_error("run_plan: source directory yielded no records (" +
                                     (ingested.warnings.empty() ? plan.source_dir
                                                                : ingested.warnings.front()) +
                                     ")");
        for (const auto& rec : ingested.records) {
            detail::PlanVariant v;
            v.name = rec.name;
            v.record = &rec;
            variants.push_back(v);
        }
    } else {
        for (double hr : plan.heart_rates_bpm)
            for (double fw : plan.fwave_amplitudes_uv) {
                detail::PlanVariant v;
                v.name = detail::grid_variant_name(hr, fw);
                v.heart_rate_bpm = hr;
                v.fwave_amplitude_uv = fw;
                variants.push_back(v);
            }
    }

    const std::size_t V = variants.size();
    const std::size_t S = plan.scenarios.size();
    const std::size_t Q = plan.snr_in_db.size();
    const std::size_t T = static_cast<std::size_t>(plan.trials);
    const std::size_t M = plan.methods.size();

    ResultsTable table;
    table.comments = echo_plan(plan);
    for (const auto& w : ingested.warnings) table.comments.push_back("ingest-warning " + w);
    table.rows.resize(V * S * Q * T * M);

    auto row_index = [&](std::size_t v, std::size_t s, std::size_t q, std::size_t t, std::size_t m) {
        return (((v * S + s) * Q + q) * T + t) * M + m;
    };

    // One work unit per (variant, trial): the record is synthesized once and
    // reused across every scenario, SNR and method.
    const std::size_t units = V * T;
    auto run_unit = [&](std::size_t unit) {
        const std::size_t v = unit / T;
        const std::size_t t = unit % T;
        const detail::PlanVariant& var = variants[v];
        const std::uint64_t record_seed = plan_record_seed(plan.master_seed, v, static_cast<long long>(t));

        auto fill_error = [&](std::size_t s, std::size_t q, std::size_t m, std::uint64_t seed,
                              const std::string& msg) {
            ResultRow& r = table.rows[row_index(v, s, q, t, m)];
            r.kind = "trial";
            r.plan = plan.name;
            r.variant = var.name;
            r.method = std::string(method_name(plan.methods[m]));
            r.scenario = std::string(scenario_name(plan.scenarios[s]));
            r.snr_in_db = plan.snr_in_db[q];
            r.trial = static_cast<long long>(t);
            r.seed = seed;
            r.error = detail::sanitize_error(msg);
        };

        Signal clean;
        std::vector<std::size_t> truth;
        try {
            if (var.record) {
                clean = var.record->signal;
                truth = clean.annotations;
            } else {
                AfEcgConfig cfg;
                cfg.seed = record_seed;
                cfg.duration_s = plan.duration_s;
                cfg.sample_rate_hz = plan.sample_rate_hz;
                cfg.heart_rate_bpm = var.heart_rate_bpm;
                cfg.fwave_amplitude_uv = var.fwave_amplitude_uv;
                GeneratedRecord rec = synth_af_ecg(cfg);
                clean = std::move(rec.composite);
                truth = std::move(rec.r_peaks);
            }
        } catch (const std::exception& e) {
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t q = 0; q < Q; ++q)
                    for (std::size_t m = 0; m < M; ++m) fill_error(s, q, m, record_seed, e.what());
            return;
        }

        EvaluationOptions eval_opts;
        eval_opts.drop_edge_beats = plan.drop_edge_beats;

        for (std::size_t s = 0; s < S; ++s) {
            const std::uint64_t noise_seed = plan_noise_seed(plan.master_seed, s, static_cast<long long>(t));
            const std::uint64_t row_seed = var.record ? noise_seed : record_seed;
            Signal pli;
            PliConfig pli_cfg;
            try {
                pli_cfg.seed = noise_seed;
                pli_cfg.scenario = plan.scenarios[s];
                pli_cfg.duration_s = static_cast<double>(clean.size()) / clean.sample_rate_hz;
                pli_cfg.sample_rate_hz = clean.sample_rate_hz;
                pli = synth_pli(pli_cfg);
                pli.samples.resize(clean.size(), 0.0);  // guard off-by-one from duration rounding
            } catch (const std::exception& e) {
                for (std::size_t q = 0; q < Q; ++q)
                    for (std::size_t m = 0; m < M; ++m) fill_error(s, q, m, row_seed, e.what());
                continue;
            }

            std::size_t calib_begin = 0;
            if (pli_cfg.scenario == PliScenario::amp_varying) {
                calib_begin = static_cast<std::size_t>(
                    std::llround(pli_cfg.onset_s * pli_cfg.sample_rate_hz));
                if (calib_begin >= clean.size()) calib_begin = 0;
            }

            for (std::size_t q = 0; q < Q; ++q) {
                Signal noisy;
                try {
                    noisy = mix_at_snr(clean, pli, SnrDb::of(plan.snr_in_db[q]), calib_begin).noisy;
                } catch (const std::exception& e) {
                    for (std::size_t m = 0; m < M; ++m) fill_error(s, q, m, row_seed, e.what());
                    continue;
                }

                for (std::size_t m = 0; m < M; ++m) {
                    ResultRow& r = table.rows[row_index(v, s, q, t, m)];
                    r.kind = "trial";
                    r.plan = plan.name;
                    r.variant = var.name;
                    r.method = std::string(method_name(plan.methods[m]));
                    r.scenario = std::string(scenario_name(plan.scenarios[s]));
                    r.snr_in_db = plan.snr_in_db[q];
                    r.trial = static_cast<long long>(t);
                    r.seed = row_seed;
                    try {
                        DenoiserSpec spec = plan.denoiser;
                        spec.method = plan.methods[m];
                        const Signal denoised = apply_method(noisy, spec);
                        // Ground-truth (or sidecar) peaks when available;
                        // otherwise detect on the denoised trace, where the
                        // interference no longer biases the detector.
                        const std::vector<std::size_t> peaks =
                            !truth.empty() ? truth : detect_r_peaks(denoised);
                        const EvaluationReport rep = evaluate(clean, denoised, peaks, eval_opts);
                        r.beat_count = static_cast<double>(rep.beat_count);
                        r.snr_out_db = rep.snr_out_db;
                        r.asci_global_pct = rep.asci_global_pct;
                        r.asci_tq_pct = rep.asci_tq_pct;
                        r.asci_qrst_pct = rep.asci_qrst_pct;
                    } catch (const std::exception& e) {
                        r.error = detail::sanitize_error(e.what());
                    }
                }
            }
        }
    };

    if (jobs == 1 || units <= 1) {
        for (std::size_t u = 0; u < units; ++u) run_unit(u);
    } else {
        std::atomic<std::size_t> next{0};
        const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), units);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) run_unit(u);
            });
        for (auto& th : pool) th.join();
    }

    // One aggregate row per (variant, scenario, snr, method) cell, appended
    // after the trial rows in deterministic cell order.
    for (std::size_t v = 0; v < V; ++v)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t q = 0; q < Q; ++q)
                for (std::size_t m = 0; m < M; ++m) {
                    std::vector<double> beats, snr, ag, atq, aqrst;
                    for (std::size_t t = 0; t < T; ++t) {
                        const ResultRow& r = table.rows[row_index(v, s, q, t, m)];
                        if (!r.error.empty() || !r.snr_out_db) continue;
                        beats.push_back(*r.beat_count);
                        snr.push_back(*r.snr_out_db);
                        ag.push_back(*r.asci_global_pct);
                        atq.push_back(*r.asci_tq_pct);
                        aqrst.push_back(*r.asci_qrst_pct);
                    }
                    ResultRow agg;
                    agg.kind = "aggregate";
                    agg.plan = plan.name;
                    agg.variant = variants[v].name;
                    agg.method = std::string(method_name(plan.methods[m]));
                    agg.scenario = std::string(scenario_name(plan.scenarios[s]));
                    agg.snr_in_db = plan.snr_in_db[q];
                    agg.trial = static_cast<long long>(snr.size());
                    if (snr.empty()) {
                        agg.error = "all trials failed";
                    } else {
                        const double m_beats = detail::mean_of(beats);
                        const double m_snr = detail::mean_of(snr);
                        const double m_ag = detail::mean_of(ag);
                        const double m_atq = detail::mean_of(atq);
                        const double m_aqrst = detail::mean_of(aqrst);
                        agg.beat_count = m_beats;
                        agg.snr_out_db = m_snr;
                        agg.asci_global_pct = m_ag;
                        agg.asci_tq_pct = m_atq;
                        agg.asci_qrst_pct = m_aqrst;
                        agg.snr_out_db_std = detail::pop_std_of(snr, m_snr);
                        agg.asci_global_pct_std = detail::pop_std_of(ag, m_ag);
                        agg.asci_tq_pct_std = detail::pop_std_of(atq, m_atq);
                        agg.asci_qrst_pct_std = detail::pop_std_of(aqrst, m_aqrst);
                    }
                    table.rows.push_back(std::move(agg));
                }
    return table;
}

// Convenience lookup used by tests and reporting.
inline const ResultRow* find_aggregate(const ResultsTable& table, const std::string& variant,
                                       const std::string& method, const std::string& scenario,
                                       double snr_in_db) {
    for (const auto& r : table.rows)
        if (r.kind == "aggregate" && r.variant == variant && r.method == method &&
            r.scenario == scenario && r.snr_in_db == snr_in_db)
            return &r;
    return nullptr;
}

}  // namespace pliwave
