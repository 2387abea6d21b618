#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tamrl/io/csv.hpp"
#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

/// Column names for an entity CSV.
struct SeriesSchema {
    std::string timestamp = "timestamp";
    std::vector<std::string> drivers;
    std::string response;

    bool operator==(const SeriesSchema&) const = default;
};

/// One entity's aligned drivers X[T x Dx] and response y[T x 1].
struct EntitySeries {
    std::string entity_id;
    std::vector<std::string> timestamps;
    Tensor drivers;
    Tensor response;

    std::size_t length() const { return timestamps.size(); }
};

/// Parses "YYYY-MM-DD" optionally followed by "THH:MM" or "THH:MM:SS" into a
/// sortable second count. Returns nullopt for malformed or impossible dates.
inline std::optional<long long> parse_iso8601(const std::string& s) {
    auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
        if (pos + n > s.size()) return std::nullopt;
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                          std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    long long secs = static_cast<long long>(std::chrono::sys_days{ymd}.time_since_epoch().count()) * 86400LL;
    if (s.size() == 10) return secs;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    auto hh = digits(11, 2), mm = digits(14, 2);
    if (!hh || !mm || s.size() < 16 || s[13] != ':' || *hh > 23 || *mm > 59) return std::nullopt;
    int ss = 0;
    if (s.size() > 16) {
        auto sv = digits(17, 2);
        if (s[16] != ':' || !sv || *sv > 59 || s.size() != 19) return std::nullopt;
        ss = *sv;
    }
    return secs + *hh * 3600LL + *mm * 60LL + ss;
}

/// Parses and validates an entity table. Rejects missing cells, undeclared or
/// absent columns, unparseable numbers and non-increasing timestamps.
inline EntitySeries parse_entity_table(const csv::Table& table, const SeriesSchema& schema, const std::string& entity_id,
                                       const std::string& source) {
    if (schema.drivers.empty()) throw DataError(source + ": schema declares no driver columns");
    if (schema.response.empty()) throw DataError(source + ": schema declares no response column");
    std::vector<std::string> declared = schema.drivers;
    declared.push_back(schema.timestamp);
    declared.push_back(schema.response);
    for (const auto& h : table.header) {
        if (std::find(declared.begin(), declared.end(), h) == declared.end()) {
            throw DataError(source + ": unknown column '" + h + "' (not declared in schema)");
        }
    }
    auto locate = [&](const std::string& name) {
        auto c = table.column(name);
        if (!c) throw DataError(source + ": unknown column '" + name + "' (declared in schema but absent from header)");
        return *c;
    };
    const std::size_t ts_col = locate(schema.timestamp);
    const std::size_t y_col = locate(schema.response);
    std::vector<std::size_t> x_cols;
    for (const auto& d : schema.drivers) x_cols.push_back(locate(d));

    const std::size_t T = table.rows.size();
    if (T == 0) throw DataError(source + ": no data rows");
    EntitySeries s;
    s.entity_id = entity_id;
    s.drivers = Tensor({T, x_cols.size()});
    s.response = Tensor({T, 1});
    std::optional<long long> prev;
    for (std::size_t r = 0; r < T; ++r) {
        const auto& rec = table.rows[r];
        const std::string where = source + ": line " + std::to_string(rec.line);
        for (std::size_t c = 0; c < rec.fields.size(); ++c) {
            if (rec.fields[c].empty()) throw DataError(where + ": missing value in column '" + table.header[c] + "'");
        }
        const std::string& ts = rec.fields[ts_col];
        auto key = parse_iso8601(ts);
        if (!key) throw DataError(where + ": invalid timestamp '" + ts + "'");
        if (prev && *key <= *prev) {
            throw DataError(where + ": timestamp '" + ts + "' is not after the previous row (timestamps must strictly increase)");
        }
        prev = key;
        s.timestamps.push_back(ts);
        auto num = [&](std::size_t c) {
            auto v = csv::parse_double(rec.fields[c]);
            if (!v || !std::isfinite(*v)) {
                throw DataError(where + ": invalid number '" + rec.fields[c] + "' in column '" + table.header[c] + "'");
            }
            return *v;
        };
        for (std::size_t j = 0; j < x_cols.size(); ++j) s.drivers(r, j) = num(x_cols[j]);
        s.response(r, 0) = num(y_col);
    }
    return s;
}

inline EntitySeries load_entity_csv(const std::filesystem::path& path, const SeriesSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    const auto table = csv::read_table(in, path.string());
    return parse_entity_table(table, schema, path.stem().string(), path.string());
}

/// A single CSV file or every *.csv in a directory, sorted by file name.
inline std::vector<EntitySeries> load_entity_dir(const std::filesystem::path& path, const SeriesSchema& schema) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& e : std::filesystem::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    if (files.empty()) throw DataError(path.string() + ": no entity CSV files found");
    std::vector<EntitySeries> out;
    for (const auto& f : files) out.push_back(load_entity_csv(f, schema));
    return out;
}

}  // namespace tamrl
