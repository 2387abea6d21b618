#pragma once

#include <string>
#include <utility>

#include "tamrl/networks/layers.hpp"
#include "tamrl/networks/lstm.hpp"

namespace tamrl {

/// Sequence-to-sequence base network for entity time series:
/// drivers -> input map f_d -> LSTM -> linear head -> response, per timestep.
struct SeqBaseParams {
    Affine input_map;
    LstmParams lstm;
    Affine head;

    std::size_t driver_size() const { return input_map.in(); }
    std::size_t input_width() const { return input_map.out(); }
    std::size_t hidden() const { return lstm.hidden(); }

    void validate() const {
        lstm.validate();
        if (lstm.input_size() != input_map.out() || head.in() != lstm.hidden() || head.out() != 1) {
            throw ShapeError("SeqBaseParams: input map, LSTM and head do not chain");
        }
    }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "base") {
        input_map.for_each_tensor(f, prefix + ".input_map");
        lstm.for_each_tensor(f, prefix + ".lstm");
        head.for_each_tensor(f, prefix + ".head");
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "base") const {
        input_map.for_each_tensor(f, prefix + ".input_map");
        lstm.for_each_tensor(f, prefix + ".lstm");
        head.for_each_tensor(f, prefix + ".head");
    }

    bool operator==(const SeqBaseParams&) const = default;
};

struct SeqBaseCache {
    Tensor x;
    Tensor u;  // input map output
    LstmCache lstm;
    Tensor h;  // LSTM outputs
};

struct SeqBaseGrads {
    SeqBaseParams d_params;
    Tensor d_x;
};

/// x[T x Dx] -> y[T x 1]
inline std::pair<Tensor, SeqBaseCache> seq_base_forward(const SeqBaseParams& p, const Tensor& x) {
    p.validate();
    SeqBaseCache cache;
    cache.x = x;
    cache.u = affine_forward(p.input_map, x);
    auto [h, lc] = lstm_forward(p.lstm, cache.u);
    cache.lstm = std::move(lc);
    Tensor y = affine_forward(p.head, h);
    cache.h = std::move(h);
    return {std::move(y), std::move(cache)};
}

inline SeqBaseGrads seq_base_backward(const SeqBaseParams& p, const SeqBaseCache& cache, const Tensor& dy) {
    SeqBaseGrads g{zeros_like_params(p), {}};
    Tensor dh = affine_backward(p.head, cache.h, dy, g.d_params.head);
    LstmGrads lg = lstm_backward(p.lstm, cache.lstm, dh);
    axpy_params(1.0, lg.d_params, g.d_params.lstm);
    g.d_x = affine_backward(p.input_map, cache.x, lg.d_seq, g.d_params.input_map);
    return g;
}

}  // namespace tamrl
