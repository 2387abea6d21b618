#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tamrl/networks/param_ops.hpp"
#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

/// Single-layer LSTM. Gate blocks are stacked row-wise in the fixed order
/// (input, forget, cell, output): w_input is 4H x D, w_recurrent 4H x H, bias 4H.
struct LstmParams {
    Tensor w_input;
    Tensor w_recurrent;
    Tensor bias;

    std::size_t hidden() const { return w_recurrent.cols(); }
    std::size_t input_size() const { return w_input.cols(); }

    void validate() const {
        const std::size_t h = w_recurrent.cols();
        if (w_recurrent.rows() != 4 * h || w_input.rows() != 4 * h || bias.size() != 4 * h) {
            throw ShapeError("LstmParams: gate blocks disagree on hidden size (w_input " + shape_str(w_input.shape()) +
                             ", w_recurrent " + shape_str(w_recurrent.shape()) + ", bias " +
                             shape_str(bias.shape()) + ")");
        }
    }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "lstm") {
        f(prefix + ".w_input", w_input);
        f(prefix + ".w_recurrent", w_recurrent);
        f(prefix + ".bias", bias);
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "lstm") const {
        f(prefix + ".w_input", w_input);
        f(prefix + ".w_recurrent", w_recurrent);
        f(prefix + ".bias", bias);
    }

    bool operator==(const LstmParams&) const = default;
};

struct LstmStepCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> i, f, g, o;  // gate activations
    std::vector<double> c, tanh_c;
};

struct LstmCache {
    std::vector<LstmStepCache> steps;
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;
};

/// One recurrence step. Fills `cache` when given.
inline LstmState lstm_step(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                           std::span<const double> c_prev, LstmStepCache* cache = nullptr) {
    const std::size_t H = p.hidden();
    if (x.size() != p.input_size() || h_prev.size() != H || c_prev.size() != H) {
        throw ShapeError("lstm_step: input width " + std::to_string(x.size()) + "/state width " +
                         std::to_string(h_prev.size()) + " do not match params (D=" +
                         std::to_string(p.input_size()) + ", H=" + std::to_string(H) + ")");
    }
    std::vector<double> a(p.bias.values().begin(), p.bias.values().end());
    gemv_acc(p.w_input, x, a);
    gemv_acc(p.w_recurrent, h_prev, a);

    LstmState out{std::vector<double>(H), std::vector<double>(H)};
    std::vector<double> gi(H), gf(H), gg(H), go(H), tc(H);
    for (std::size_t k = 0; k < H; ++k) {
        gi[k] = sigmoid(a[k]);
        gf[k] = sigmoid(a[H + k]);
        gg[k] = std::tanh(a[2 * H + k]);
        go[k] = sigmoid(a[3 * H + k]);
        out.c[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
        tc[k] = std::tanh(out.c[k]);
        out.h[k] = go[k] * tc[k];
    }
    if (cache != nullptr) {
        cache->x.assign(x.begin(), x.end());
        cache->h_prev.assign(h_prev.begin(), h_prev.end());
        cache->c_prev.assign(c_prev.begin(), c_prev.end());
        cache->i = std::move(gi);
        cache->f = std::move(gf);
        cache->g = std::move(gg);
        cache->o = std::move(go);
        cache->c = out.c;
        cache->tanh_c = std::move(tc);
    }
    return out;
}

/// Runs the recurrence over seq[T x D]; returns every hidden state as [T x H].
/// Empty h0/c0 mean zero initial state.
inline std::pair<Tensor, LstmCache> lstm_forward(const LstmParams& p, const Tensor& seq, const Tensor& h0 = {},
                                                 const Tensor& c0 = {}) {
    p.validate();
    if (seq.rank() != 2 || seq.cols() != p.input_size()) {
        throw ShapeError("lstm_forward: sequence " + shape_str(seq.shape()) + " but params expect " +
                         std::to_string(p.input_size()) + " input columns");
    }
    const std::size_t T = seq.rows(), H = p.hidden();
    std::vector<double> h = h0.empty() ? std::vector<double>(H, 0.0) : h0.storage();
    std::vector<double> c = c0.empty() ? std::vector<double>(H, 0.0) : c0.storage();
    Tensor hs({T, H});
    LstmCache cache;
    cache.steps.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        LstmState s = lstm_step(p, seq.row(t), h, c, &cache.steps[t]);
        std::copy(s.h.begin(), s.h.end(), hs.row(t).begin());
        h = std::move(s.h);
        c = std::move(s.c);
    }
    return {std::move(hs), std::move(cache)};
}

struct LstmGrads {
    LstmParams d_params;
    Tensor d_seq;
    Tensor d_h0;
    Tensor d_c0;
};

/// Backpropagation through time given dLoss/dH for every timestep.
inline LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache, const Tensor& d_hidden) {
    const std::size_t T = cache.steps.size(), H = p.hidden(), D = p.input_size();
    if (T == 0 || d_hidden.rank() != 2 || d_hidden.rows() != T || d_hidden.cols() != H) {
        throw ShapeError("lstm_backward: upstream gradient " + shape_str(d_hidden.shape()) + " does not match cache of " +
                         std::to_string(T) + " steps with H=" + std::to_string(H));
    }
    if (cache.steps.front().x.size() != D || cache.steps.front().i.size() != H) {
        throw ShapeError("lstm_backward: stale cache");
    }
    LstmGrads g{zeros_like_params(p), Tensor({T, D}), Tensor({H}), Tensor({H})};
    std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), da(4 * H);
    for (std::size_t t = T; t-- > 0;) {
        const LstmStepCache& s = cache.steps[t];
        for (std::size_t k = 0; k < H; ++k) {
            const double dh = d_hidden(t, k) + dh_next[k];
            const double d_o = dh * s.tanh_c[k];
            const double dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
            const double d_i = dc * s.g[k];
            const double d_g = dc * s.i[k];
            const double d_f = dc * s.c_prev[k];
            dc_next[k] = dc * s.f[k];
            da[k] = d_i * s.i[k] * (1.0 - s.i[k]);
            da[H + k] = d_f * s.f[k] * (1.0 - s.f[k]);
            da[2 * H + k] = d_g * (1.0 - s.g[k] * s.g[k]);
            da[3 * H + k] = d_o * s.o[k] * (1.0 - s.o[k]);
        }
        outer_acc(da, s.x, g.d_params.w_input);
        outer_acc(da, s.h_prev, g.d_params.w_recurrent);
        for (std::size_t k = 0; k < 4 * H; ++k) g.d_params.bias[k] += da[k];
        gemv_t_acc(p.w_input, da, g.d_seq.row(t));
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        gemv_t_acc(p.w_recurrent, da, dh_next);
    }
    std::copy(dh_next.begin(), dh_next.end(), g.d_h0.values().begin());
    std::copy(dc_next.begin(), dc_next.end(), g.d_c0.values().begin());
    return g;
}

}  // namespace tamrl
