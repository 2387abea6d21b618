#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tamrl/numcore/errors.hpp"

namespace tamrl::csv {

/// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
    return std::string(s);
}

/// Splits on commas. No quoting: none of the formats here need it.
inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

/// One parsed data line with its 1-based line number in the source.
struct Record {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> comments;  // '#' lines, without the marker
    std::vector<std::string> header;
    std::vector<Record> rows;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }

    std::size_t require_column(std::string_view name, const std::string& source) const {
        auto c = column(name);
        if (!c) throw DataError(source + ": missing column '" + std::string(name) + "'");
        return *c;
    }
};

/// Reads a header line followed by data lines; '#' lines are collected as
/// comments, blank lines are skipped.
inline Table read_table(std::istream& in, const std::string& source) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
        if (line.empty()) continue;
        if (line.front() == '#') {
            t.comments.push_back(trim(std::string_view(line).substr(1)));
            continue;
        }
        auto fields = split_fields(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw DataError(source + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back({lineno, std::move(fields)});
    }
    if (!have_header) throw DataError(source + ": no header row");
    return t;
}

inline std::string join(const std::vector<std::string>& parts, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace tamrl::csv
