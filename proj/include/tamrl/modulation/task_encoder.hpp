#pragma once

#include <span>
#include <vector>

#include "tamrl/episode.hpp"
#include "tamrl/networks/bilstm.hpp"

namespace tamrl {

/// Encoder input rows are [x_t ; y_t].
inline Tensor encoder_input(const Sample& s) {
    if (s.x.rank() != 2 || s.y.rank() != 2 || s.x.rows() != s.y.rows()) {
        throw ShapeError("encoder_input: drivers " + shape_str(s.x.shape()) + " and responses " + shape_str(s.y.shape()) +
                         " are not aligned");
    }
    return concat_cols(s.x, s.y);
}

struct EncoderCache {
    std::vector<BiLstmCache> per_sample;
};

/// z is the BiLSTM embedding of the support set. With several support
/// samples (windows) the per-sample embeddings are averaged.
inline std::pair<Tensor, EncoderCache> encode_task_cached(const BiLstmParams& enc, std::span<const Sample> support) {
    if (support.empty()) throw DataError("encode_task: empty support set");
    EncoderCache cache;
    Tensor z({enc.hidden()});
    for (const auto& s : support) {
        auto [zs, c] = bilstm_encode(enc, encoder_input(s));
        axpy(1.0, zs, z);
        cache.per_sample.push_back(std::move(c));
    }
    if (support.size() > 1) z = scaled(z, 1.0 / static_cast<double>(support.size()));
    return {std::move(z), std::move(cache)};
}

inline Tensor encode_task(const BiLstmParams& enc, std::span<const Sample> support) {
    return encode_task_cached(enc, support).first;
}

inline BiLstmParams encoder_backward(const BiLstmParams& enc, const EncoderCache& cache, const Tensor& dz) {
    BiLstmParams grad = zeros_like_params(enc);
    const Tensor d = cache.per_sample.size() > 1 ? scaled(dz, 1.0 / static_cast<double>(cache.per_sample.size())) : dz;
    for (const auto& c : cache.per_sample) axpy_params(1.0, bilstm_backward(enc, c, d).d_params, grad);
    return grad;
}

}  // namespace tamrl
