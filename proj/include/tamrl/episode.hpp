#pragma once

#include <string>
#include <vector>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

/// One aligned block of drivers x[T x Dx] and responses y[T x 1]. For the
/// synthetic benchmark a sample is a set of points; for entity series it is
/// one sliding window.
struct Sample {
    Tensor x;
    Tensor y;

    std::size_t length() const { return x.rows(); }

    bool operator==(const Sample&) const = default;
};

/// Support and query samples for one task/entity.
struct TaskEpisode {
    std::string id;
    std::string label;  // family name or entity group; informational only
    std::vector<Sample> support;
    std::vector<Sample> query;

    bool operator==(const TaskEpisode&) const = default;
};

inline void check_episode(const TaskEpisode& e) {
    if (e.support.empty()) throw DataError("episode " + e.id + ": empty support set");
    if (e.query.empty()) throw DataError("episode " + e.id + ": empty query set");
}

}  // namespace tamrl
