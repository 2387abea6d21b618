#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tamrl/numcore/errors.hpp"

namespace tamrl {

inline double mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size() || pred.empty()) {
        throw ShapeError("rmse: prediction length " + std::to_string(pred.size()) + " vs target length " +
                         std::to_string(target.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

inline double rmse(std::span<const double> pred, std::span<const double> target) { return std::sqrt(mse(pred, target)); }

/// Element-wise mean of several prediction vectors of equal length.
inline std::vector<double> ensemble_mean(const std::vector<std::vector<double>>& members) {
    if (members.empty()) throw ShapeError("ensemble: no members");
    std::vector<double> out(members.front().size(), 0.0);
    for (const auto& m : members) {
        if (m.size() != out.size()) throw ShapeError("ensemble: members differ in length");
        for (std::size_t i = 0; i < m.size(); ++i) out[i] += m[i];
    }
    for (auto& v : out) v /= static_cast<double>(members.size());
    return out;
}

/// RMSE of the member-averaged prediction.
inline double ensemble_rmse(const std::vector<std::vector<double>>& members, std::span<const double> target) {
    const auto avg = ensemble_mean(members);
    return rmse(avg, target);
}

}  // namespace tamrl
