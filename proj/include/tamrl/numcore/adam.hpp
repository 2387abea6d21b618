#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    bool operator==(const AdamHyper&) const = default;
};

/// Moment accumulators for one parameter tensor.
struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t step = 0;
    AdamHyper hyper;

    static AdamState for_params(const Tensor& params, AdamHyper hyper = {}) {
        return AdamState{zeros_like(params), zeros_like(params), 0, hyper};
    }

    bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam step. Pure: returns the new params and state.
inline std::pair<Tensor, AdamState> adam_step(const Tensor& params, const Tensor& grads, const AdamState& state) {
    require_same_shape(params, grads, "adam_step(params, grads)");
    require_same_shape(params, state.m, "adam_step(params, m)");
    require_same_shape(params, state.v, "adam_step(params, v)");
    require_finite(grads, "adam_step gradient");

    const AdamHyper& h = state.hyper;
    AdamState next = state;
    next.step = state.step + 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(next.step));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(next.step));

    Tensor out = params;
    auto p = out.values();
    auto g = grads.values();
    auto m = next.m.values();
    auto v = next.v.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
    return {std::move(out), std::move(next)};
}

}  // namespace tamrl
