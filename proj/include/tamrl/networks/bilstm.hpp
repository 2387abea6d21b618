#pragma once

#include <string>
#include <utility>

#include "tamrl/networks/lstm.hpp"

namespace tamrl {

/// Bidirectional encoder: one LSTM reads the sequence forwards, the other
/// reads it reversed; their final hidden states are summed.
struct BiLstmParams {
    LstmParams forward;
    LstmParams backward;

    std::size_t hidden() const { return forward.hidden(); }
    std::size_t input_size() const { return forward.input_size(); }

    void validate() const {
        forward.validate();
        backward.validate();
        if (forward.hidden() != backward.hidden() || forward.input_size() != backward.input_size()) {
            throw ShapeError("BiLstmParams: forward and backward directions must share sizes");
        }
    }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "encoder") {
        forward.for_each_tensor(f, prefix + ".fwd");
        backward.for_each_tensor(f, prefix + ".bwd");
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "encoder") const {
        forward.for_each_tensor(f, prefix + ".fwd");
        backward.for_each_tensor(f, prefix + ".bwd");
    }

    bool operator==(const BiLstmParams&) const = default;
};

struct BiLstmCache {
    LstmCache forward;
    LstmCache backward;
};

struct BiLstmGrads {
    BiLstmParams d_params;
    Tensor d_seq;
};

/// z = h_fwd(T) + h_bwd(T), the backward direction running over reverse(seq).
inline std::pair<Tensor, BiLstmCache> bilstm_encode(const BiLstmParams& p, const Tensor& seq) {
    if (seq.empty() || seq.rank() != 2) throw DataError("bilstm_encode: empty support sequence");
    p.validate();
    auto [hf, cf] = lstm_forward(p.forward, seq);
    auto [hb, cb] = lstm_forward(p.backward, reverse_rows(seq));
    const std::size_t T = seq.rows(), H = p.hidden();
    Tensor z({H});
    for (std::size_t k = 0; k < H; ++k) z[k] = hf(T - 1, k) + hb(T - 1, k);
    return {std::move(z), BiLstmCache{std::move(cf), std::move(cb)}};
}

inline BiLstmGrads bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache, const Tensor& dz) {
    const std::size_t T = cache.forward.steps.size(), H = p.hidden();
    if (T == 0 || cache.backward.steps.size() != T) throw ShapeError("bilstm_backward: stale cache");
    if (dz.size() != H) throw ShapeError("bilstm_backward: dz has " + std::to_string(dz.size()) + " entries, H=" + std::to_string(H));
    Tensor dh({T, H});
    for (std::size_t k = 0; k < H; ++k) dh(T - 1, k) = dz[k];
    LstmGrads gf = lstm_backward(p.forward, cache.forward, dh);
    LstmGrads gb = lstm_backward(p.backward, cache.backward, dh);
    Tensor d_seq = gf.d_seq;
    axpy(1.0, reverse_rows(gb.d_seq), d_seq);
    return {BiLstmParams{std::move(gf.d_params), std::move(gb.d_params)}, std::move(d_seq)};
}

}  // namespace tamrl
