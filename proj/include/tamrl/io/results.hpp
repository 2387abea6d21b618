#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "tamrl/io/csv.hpp"

namespace tamrl {

/// One scored (entity, budget, model, seed) combination. `seed` is a member
/// seed or "ensemble" for the seed-averaged prediction.
struct ResultRow {
    std::string entity_id;
    std::string budget;
    std::string model;
    std::string seed;
    double rmse = 0.0;

    bool operator==(const ResultRow&) const = default;
};

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{"entity_id", "budget", "model", "seed", "rmse"};
    return cols;
}

/// `provenance` lines are written first as '#' comments.
inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows,
                          const std::vector<std::string>& provenance = {}) {
    for (const auto& p : provenance) out << "# " << p << '\n';
    out << csv::join(result_columns()) << '\n';
    for (const auto& r : rows) {
        if (r.rmse < 0.0) throw DataError("write_results: negative rmse for " + r.entity_id);
        out << r.entity_id << ',' << r.budget << ',' << r.model << ',' << r.seed << ',' << csv::format_double(r.rmse) << '\n';
    }
}

inline std::vector<ResultRow> parse_results(const csv::Table& t, const std::string& source) {
    std::vector<std::size_t> idx;
    for (const auto& c : result_columns()) idx.push_back(t.require_column(c, source));
    std::vector<ResultRow> rows;
    for (const auto& rec : t.rows) {
        auto v = csv::parse_double(rec.fields[idx[4]]);
        if (!v || *v < 0.0) throw DataError(source + ": line " + std::to_string(rec.line) + ": invalid rmse");
        rows.push_back({rec.fields[idx[0]], rec.fields[idx[1]], rec.fields[idx[2]], rec.fields[idx[3]], *v});
    }
    return rows;
}

inline std::vector<ResultRow> read_results(std::istream& in, const std::string& source = "results") {
    return parse_results(csv::read_table(in, source), source);
}

inline std::vector<ResultRow> read_results_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open file");
    return read_results(in, path);
}

}  // namespace tamrl
