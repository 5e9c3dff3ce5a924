#pragma once

// CSV and annotation-sidecar IO.
//
// Ingest accepts one or more numeric columns, comma or semicolon delimited,
// with an optional header line and optional leading time column; '#' lines
// are comments. Sample rates always arrive out of band. Exports write floats
// with std::to_chars so parse -> format round-trips are byte-exact.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pliwave/signal.hpp"

namespace pliwave {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
    // Trim surrounding whitespace; from_chars is strict about it.
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t' || text.front() == '\r'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty()) return false;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == delim) {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

}  // namespace detail

struct CsvTable {
    std::vector<std::string> column_names;  // empty when the file had no header
    std::vector<std::vector<double>> columns;
    bool first_column_is_time = false;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    CsvTable table;
    std::string line;
    char delim = ',';
    bool delim_known = false;
    bool header_checked = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view view(line);
        if (view.empty()) continue;
        if (view.front() == '#') continue;

        if (!delim_known) {
            delim = view.find(';') != std::string_view::npos ? ';' : ',';
            delim_known = true;
        }
        auto fields = detail::split_fields(view, delim);

        if (!header_checked) {
            header_checked = true;
            double probe;
            bool all_numeric = true;
            for (auto f : fields)
                if (!parse_double(f, probe)) { all_numeric = false; break; }
            if (!all_numeric) {
                for (auto f : fields) table.column_names.emplace_back(f);
                continue;
            }
        }

        if (table.columns.empty()) table.columns.resize(fields.size());
        if (fields.size() != table.columns.size())
            throw std::runtime_error(path.string() + ": ragged row (expected " +
                                     std::to_string(table.columns.size()) + " fields)");
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v;
            if (!parse_double(fields[c], v))
                throw std::runtime_error(path.string() + ": non-numeric field '" +
                                         std::string(fields[c]) + "'");
            table.columns[c].push_back(v);
        }
    }
    if (table.columns.empty() || table.columns[0].empty())
        throw std::runtime_error(path.string() + ": no data rows");

    // A leading strictly-increasing column is treated as time when at least
    // one other column is present.
    if (table.columns.size() >= 2) {
        const auto& t = table.columns[0];
        bool increasing = true;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (t[i] <= t[i - 1]) { increasing = false; break; }
        bool named_time = !table.column_names.empty() &&
                          table.column_names[0].find("time") != std::string::npos;
        table.first_column_is_time = increasing && (named_time || table.column_names.empty());
    }
    return table;
}

// Each amplitude column of the file becomes an independent record.
inline std::vector<Signal> read_records_csv(const std::filesystem::path& path, double sample_rate_hz) {
    const CsvTable table = read_csv(path);
    std::vector<Signal> records;
    const std::size_t first = table.first_column_is_time ? 1 : 0;
    for (std::size_t c = first; c < table.columns.size(); ++c)
        records.push_back(make_signal(table.columns[c], sample_rate_hz));
    if (records.empty()) throw std::runtime_error(path.string() + ": no amplitude columns");
    return records;
}

inline Signal read_signal_csv(const std::filesystem::path& path, double sample_rate_hz) {
    return read_records_csv(path, sample_rate_hz).front();
}

inline void write_signal_csv(const std::filesystem::path& path, const Signal& s,
                             const std::vector<std::string>& comments = {}) {
    validate_signal(s, "write_signal_csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "time_s,amplitude_mv\n";
    for (std::size_t i = 0; i < s.samples.size(); ++i)
        out << format_double(static_cast<double>(i) / s.sample_rate_hz) << ','
            << format_double(s.samples[i]) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<std::size_t> read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::size_t> ann;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::size_t pos = 0;
        long long v = -1;
        try {
            v = std::stoll(line, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ": bad annotation line '" + line + "'");
        }
        if (pos != line.size() || v < 0)
            throw std::runtime_error(path.string() + ": bad annotation line '" + line + "'");
        ann.push_back(static_cast<std::size_t>(v));
    }
    return ann;
}

inline void write_annotations(const std::filesystem::path& path, const std::vector<std::size_t>& ann) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t a : ann) out << a << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace pliwave
