#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tamrl/episode.hpp"
#include "tamrl/io/entity_series.hpp"
#include "tamrl/numcore/rng.hpp"

namespace tamrl {

struct SlidingWindow {
    std::size_t start = 0;
    std::size_t length = 0;

    bool operator==(const SlidingWindow&) const = default;
};

/// Starts 0, S, 2S, ... while start + L <= T.
inline std::vector<SlidingWindow> make_windows(std::size_t series_length, std::size_t length, std::size_t stride) {
    if (length == 0) throw DataError("make_windows: window length must be at least 1");
    if (stride == 0) throw DataError("make_windows: stride must be at least 1");
    if (length > series_length) {
        throw DataError("make_windows: window length " + std::to_string(length) + " exceeds series length " +
                        std::to_string(series_length));
    }
    std::vector<SlidingWindow> out;
    for (std::size_t s = 0; s + length <= series_length; s += stride) out.push_back({s, length});
    return out;
}

inline std::vector<SlidingWindow> make_windows(const EntitySeries& series, std::size_t length, std::size_t stride) {
    return make_windows(series.length(), length, stride);
}

/// Window contents as a sample, optionally offset into the series.
inline Sample window_sample(const EntitySeries& s, const SlidingWindow& w) {
    if (w.start + w.length > s.length()) throw DataError("window_sample: window exceeds series " + s.entity_id);
    return Sample{slice_rows(s.drivers, w.start, w.length), slice_rows(s.response, w.start, w.length)};
}

/// Indices into a window list, partitioned into support and query.
struct WindowSplit {
    std::vector<std::size_t> support;
    std::vector<std::size_t> query;
};

/// Random disjoint partition with exactly `support_count` support windows;
/// every other window is a query window. Both sides come back sorted.
inline WindowSplit split_by_count(std::size_t n_windows, std::size_t support_count, SeededRng& rng) {
    if (n_windows < 2) throw DataError("split_support_query: need at least 2 windows, got " + std::to_string(n_windows));
    if (support_count < 1 || support_count >= n_windows) {
        throw DataError("split_support_query: support count " + std::to_string(support_count) + " leaves no query windows");
    }
    std::vector<std::size_t> idx(n_windows);
    for (std::size_t i = 0; i < n_windows; ++i) idx[i] = i;
    rng.shuffle(idx);
    WindowSplit out;
    out.support.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(support_count));
    out.query.assign(idx.begin() + static_cast<std::ptrdiff_t>(support_count), idx.end());
    std::sort(out.support.begin(), out.support.end());
    std::sort(out.query.begin(), out.query.end());
    return out;
}

/// Support share rounded to the nearest count, clamped so both sides are nonempty.
inline WindowSplit split_support_query(std::size_t n_windows, double support_fraction, SeededRng& rng) {
    if (n_windows < 2) throw DataError("split_support_query: need at least 2 windows, got " + std::to_string(n_windows));
    if (!(support_fraction > 0.0 && support_fraction < 1.0)) {
        throw DataError("split_support_query: support fraction must lie in (0, 1)");
    }
    auto k = static_cast<std::size_t>(std::llround(support_fraction * static_cast<double>(n_windows)));
    k = std::clamp<std::size_t>(k, 1, n_windows - 1);
    return split_by_count(n_windows, k, rng);
}

/// Materializes a time-series episode from a window partition.
inline TaskEpisode window_episode(const EntitySeries& s, const std::vector<SlidingWindow>& windows, const WindowSplit& split) {
    TaskEpisode e;
    e.id = s.entity_id;
    for (auto i : split.support) e.support.push_back(window_sample(s, windows[i]));
    for (auto i : split.query) e.query.push_back(window_sample(s, windows[i]));
    return e;
}

}  // namespace tamrl
