#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

/// Central-difference gradient of a scalar function, one coordinate at a time.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
    if (!(eps > 0.0)) throw NumericError("finite_diff_grad: eps must be positive");
    Tensor grad = zeros_like(x);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double plus = f(probe);
        probe[i] = orig - eps;
        const double minus = f(probe);
        probe[i] = orig;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw NumericError("finite_diff_grad: non-finite function value at coordinate " + std::to_string(i));
        }
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    return grad;
}

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish. Used for gradient checks.
inline double relative_error(const Tensor& analytic, const Tensor& numeric) {
    require_same_shape(analytic, numeric, "relative_error");
    const double denom = std::max(norm(analytic), norm(numeric));
    if (denom < 1e-12) return norm(sub(analytic, numeric));
    return norm(sub(analytic, numeric)) / denom;
}

}  // namespace tamrl
