#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

struct LossGrad {
    double value = 0.0;
    Tensor grad;  // dLoss/dpred
};

/// Mean of squared residuals over every entry, with its exact gradient
/// 2 (pred - target) / size.
inline LossGrad mse_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse_loss");
    LossGrad out{0.0, Tensor(pred.shape())};
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        out.value += d * d;
        out.grad[i] = 2.0 * d / n;
    }
    out.value /= n;
    return out;
}

/// Aborts with NumericError once a loss turns NaN or infinite.
inline void require_finite_loss(double loss, const std::string& where) {
    if (!std::isfinite(loss)) throw NumericError(where + ": loss became non-finite");
}

}  // namespace tamrl
