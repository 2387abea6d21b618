#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "tamrl/episode.hpp"
#include "tamrl/io/csv.hpp"
#include "tamrl/numcore/rng.hpp"

namespace tamrl::synthetic {

enum class Family { sine, linear, quadratic, l1norm, tanh };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::sine: return "sine";
        case Family::linear: return "linear";
        case Family::quadratic: return "quadratic";
        case Family::l1norm: return "l1norm";
        case Family::tanh: return "tanh";
    }
    return "?";
}

inline Family parse_family(const std::string& s) {
    for (Family f : {Family::sine, Family::linear, Family::quadratic, Family::l1norm, Family::tanh})
        if (s == family_name(f)) return f;
    throw DataError("unknown task family '" + s + "'");
}

struct Interval {
    double lo;
    double hi;
};

/// Parameter ranges per family.
namespace ranges {
inline constexpr Interval sine_amplitude{0.1, 5.0};
inline constexpr Interval sine_frequency{0.5, 2.0};
inline constexpr Interval sine_phase{0.0, 2.0 * std::numbers::pi};
inline constexpr Interval linear_slope{-3.0, 3.0};
inline constexpr Interval linear_intercept{-3.0, 3.0};
inline constexpr Interval small_amplitude{0.02, 0.15};  // magnitude; sign drawn separately
inline constexpr Interval center{-3.0, 3.0};
inline constexpr Interval offset{-3.0, 3.0};
inline constexpr Interval tanh_amplitude{-3.0, 3.0};
}  // namespace ranges

/// Realized task. Unused parameters stay zero: sine uses (A, w, b) with b the
/// phase; linear uses (A, b); quadratic, l1norm and tanh use (A, c, b).
struct TaskInstance {
    Family family = Family::sine;
    double A = 0.0;
    double w = 0.0;
    double b = 0.0;
    double c = 0.0;

    bool operator==(const TaskInstance&) const = default;
};

inline double eval_task(const TaskInstance& t, double x) {
    switch (t.family) {
        case Family::sine: return t.A * std::sin(t.w * x + t.b);
        case Family::linear: return t.A * x + t.b;
        case Family::quadratic: return t.A * (x - t.c) * (x - t.c) + t.b;
        case Family::l1norm: return t.A * std::abs(x - t.c) + t.b;
        case Family::tanh: return t.A * std::tanh(x - t.c) + t.b;
    }
    return 0.0;
}

inline double draw(SeededRng& rng, Interval r) { return rng.uniform(r.lo, r.hi); }

/// Amplitude on [-0.15, -0.02] U [0.02, 0.15]: sign first, then magnitude.
inline double draw_signed_small(SeededRng& rng) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return sign * draw(rng, ranges::small_amplitude);
}

inline TaskInstance sample_task(Family family, SeededRng& rng) {
    TaskInstance t;
    t.family = family;
    switch (family) {
        case Family::sine:
            t.A = draw(rng, ranges::sine_amplitude);
            t.w = draw(rng, ranges::sine_frequency);
            t.b = draw(rng, ranges::sine_phase);
            break;
        case Family::linear:
            t.A = draw(rng, ranges::linear_slope);
            t.b = draw(rng, ranges::linear_intercept);
            break;
        case Family::quadratic:
        case Family::l1norm:
            t.A = draw_signed_small(rng);
            t.c = draw(rng, ranges::center);
            t.b = draw(rng, ranges::offset);
            break;
        case Family::tanh:
            t.A = draw(rng, ranges::tanh_amplitude);
            t.c = draw(rng, ranges::center);
            t.b = draw(rng, ranges::offset);
            break;
    }
    return t;
}

struct EpisodeConfig {
    std::size_t support_size = 5;
    std::size_t query_size = 5;
    double noise_std = 0.3;
    double x_min = -5.0;
    double x_max = 5.0;
};

/// Support and query points drawn independently for one task.
struct RegressionEpisode {
    std::uint64_t task_id = 0;
    TaskInstance task;
    std::vector<double> support_x, support_y;
    std::vector<double> query_x, query_y;

    bool operator==(const RegressionEpisode&) const = default;
};

inline RegressionEpisode sample_episode(const TaskInstance& task, const EpisodeConfig& cfg, SeededRng& rng) {
    if (cfg.support_size < 1 || cfg.query_size < 1) throw DataError("sample_episode: support and query sizes must be >= 1");
    RegressionEpisode e;
    e.task = task;
    auto fill = [&](std::size_t n, std::vector<double>& xs, std::vector<double>& ys) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.uniform(cfg.x_min, cfg.x_max);
            double y = eval_task(task, x);
            if (cfg.noise_std > 0.0) y += cfg.noise_std * rng.normal();
            xs.push_back(x);
            ys.push_back(y);
        }
    };
    fill(cfg.support_size, e.support_x, e.support_y);
    fill(cfg.query_size, e.query_x, e.query_y);
    return e;
}

enum class ModeSet { set1 = 1, set2 = 2, set3 = 3 };

inline std::array<Family, 3> set_families(ModeSet s) {
    switch (s) {
        case ModeSet::set1: return {Family::sine, Family::linear, Family::quadratic};
        case ModeSet::set2: return {Family::linear, Family::tanh, Family::l1norm};
        case ModeSet::set3: return {Family::quadratic, Family::tanh, Family::l1norm};
    }
    return {};
}

inline ModeSet parse_mode_set(int n) {
    if (n < 1 || n > 3) throw ConfigError("unknown mode set SET" + std::to_string(n) + " (expected 1, 2 or 3)");
    return static_cast<ModeSet>(n);
}

inline ModeSet parse_mode_set(const std::string& s) {
    std::string t = s;
    if (t.rfind("SET", 0) == 0 || t.rfind("set", 0) == 0) t = t.substr(3);
    auto n = csv::parse_u64(t);
    if (!n) throw ConfigError("unknown mode set '" + s + "'");
    return parse_mode_set(static_cast<int>(*n));
}

inline std::string set_name(ModeSet s) { return "SET" + std::to_string(static_cast<int>(s)); }

/// Task i uses family i mod 3 and its own sub-stream derive(seed, i), so any
/// task can be regenerated independently of the others.
inline std::vector<RegressionEpisode> build_mode_set(ModeSet set, std::size_t tasks_per_mode, std::uint64_t seed,
                                                     const EpisodeConfig& cfg) {
    if (tasks_per_mode < 1) throw DataError("build_mode_set: tasks_per_mode must be >= 1");
    const auto families = set_families(set);
    std::vector<RegressionEpisode> out;
    out.reserve(3 * tasks_per_mode);
    for (std::size_t i = 0; i < 3 * tasks_per_mode; ++i) {
        SeededRng rng(SeededRng::derive(seed, i));
        const TaskInstance task = sample_task(families[i % 3], rng);
        RegressionEpisode e = sample_episode(task, cfg, rng);
        e.task_id = i;
        out.push_back(std::move(e));
    }
    return out;
}

inline Tensor column(const std::vector<double>& v) { return Tensor({v.size(), 1}, v); }

/// The generic episode form consumed by the trainer: one support sample and
/// one query sample, each a column of points.
inline TaskEpisode to_task_episode(const RegressionEpisode& e, const std::string& prefix = "task") {
    TaskEpisode t;
    t.id = prefix + std::to_string(e.task_id);
    t.label = family_name(e.task.family);
    t.support.push_back({column(e.support_x), column(e.support_y)});
    t.query.push_back({column(e.query_x), column(e.query_y)});
    return t;
}

inline std::vector<TaskEpisode> to_task_episodes(const std::vector<RegressionEpisode>& es, const std::string& prefix = "task") {
    std::vector<TaskEpisode> out;
    out.reserve(es.size());
    for (const auto& e : es) out.push_back(to_task_episode(e, prefix));
    return out;
}

// ---------------------------------------------------------------------------
// CSV persistence
// ---------------------------------------------------------------------------

inline void write_task_manifest(std::ostream& out, const std::vector<RegressionEpisode>& es,
                                const std::vector<std::string>& provenance = {}) {
    for (const auto& p : provenance) out << "# " << p << '\n';
    out << "task_id,family,A,w,b,c\n";
    for (const auto& e : es) {
        out << e.task_id << ',' << family_name(e.task.family) << ',' << csv::format_double(e.task.A) << ','
            << csv::format_double(e.task.w) << ',' << csv::format_double(e.task.b) << ','
            << csv::format_double(e.task.c) << '\n';
    }
}

inline void write_episodes(std::ostream& out, const std::vector<RegressionEpisode>& es,
                           const std::vector<std::string>& provenance = {}) {
    for (const auto& p : provenance) out << "# " << p << '\n';
    out << "task_id,split,x,y\n";
    for (const auto& e : es) {
        for (std::size_t i = 0; i < e.support_x.size(); ++i)
            out << e.task_id << ",support," << csv::format_double(e.support_x[i]) << ','
                << csv::format_double(e.support_y[i]) << '\n';
        for (std::size_t i = 0; i < e.query_x.size(); ++i)
            out << e.task_id << ",query," << csv::format_double(e.query_x[i]) << ',' << csv::format_double(e.query_y[i])
                << '\n';
    }
}

/// Rebuilds episodes from a task manifest and an episode table.
inline std::vector<RegressionEpisode> read_episodes(std::istream& tasks_in, std::istream& episodes_in,
                                                    const std::string& source) {
    const auto tasks = csv::read_table(tasks_in, source + " (tasks)");
    const auto eps = csv::read_table(episodes_in, source + " (episodes)");
    std::vector<RegressionEpisode> out;
    const std::size_t ci = tasks.require_column("task_id", source), cf = tasks.require_column("family", source),
                      ca = tasks.require_column("A", source), cw = tasks.require_column("w", source),
                      cb = tasks.require_column("b", source), cc = tasks.require_column("c", source);
    auto num = [&](const csv::Record& r, std::size_t c) {
        auto v = csv::parse_double(r.fields[c]);
        if (!v) throw DataError(source + ": line " + std::to_string(r.line) + ": invalid number");
        return *v;
    };
    std::vector<std::size_t> index_of;
    for (const auto& r : tasks.rows) {
        RegressionEpisode e;
        auto id = csv::parse_u64(r.fields[ci]);
        if (!id) throw DataError(source + ": line " + std::to_string(r.line) + ": invalid task_id");
        e.task_id = *id;
        e.task.family = parse_family(r.fields[cf]);
        e.task.A = num(r, ca);
        e.task.w = num(r, cw);
        e.task.b = num(r, cb);
        e.task.c = num(r, cc);
        if (e.task_id >= index_of.size()) index_of.resize(e.task_id + 1, SIZE_MAX);
        index_of[e.task_id] = out.size();
        out.push_back(std::move(e));
    }
    const std::size_t ei = eps.require_column("task_id", source), es = eps.require_column("split", source),
                      ex = eps.require_column("x", source), ey = eps.require_column("y", source);
    for (const auto& r : eps.rows) {
        auto id = csv::parse_u64(r.fields[ei]);
        if (!id || *id >= index_of.size() || index_of[*id] == SIZE_MAX) {
            throw DataError(source + ": line " + std::to_string(r.line) + ": episode row for unknown task");
        }
        auto& e = out[index_of[*id]];
        if (r.fields[es] == "support") {
            e.support_x.push_back(num(r, ex));
            e.support_y.push_back(num(r, ey));
        } else if (r.fields[es] == "query") {
            e.query_x.push_back(num(r, ex));
            e.query_y.push_back(num(r, ey));
        } else {
            throw DataError(source + ": line " + std::to_string(r.line) + ": split must be 'support' or 'query'");
        }
    }
    return out;
}

}  // namespace tamrl::synthetic
