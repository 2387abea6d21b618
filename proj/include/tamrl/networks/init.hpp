#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tamrl/networks/bilstm.hpp"
#include "tamrl/networks/mlp.hpp"
#include "tamrl/networks/seq_base.hpp"
#include "tamrl/numcore/rng.hpp"

namespace tamrl {

/// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) where fan_in = cols.
inline Tensor init_weight(std::size_t rows, std::size_t cols, SeededRng& rng) {
    Tensor w({rows, cols});
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (auto& v : w.values()) v = rng.uniform(-bound, bound);
    return w;
}

inline Affine init_affine(std::size_t in, std::size_t out, SeededRng& rng) {
    return Affine{init_weight(out, in, rng), Tensor({out})};
}

/// widths = {in, hidden..., out}; relu on hidden layers, identity on the output.
inline MlpParams init_mlp(std::span<const std::size_t> widths, SeededRng& rng) {
    if (widths.size() < 2) throw ShapeError("init_mlp: need at least input and output widths");
    MlpParams p;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        p.layers.push_back(init_affine(widths[l], widths[l + 1], rng));
        p.activations.push_back(l + 2 == widths.size() ? Activation::identity : Activation::relu);
    }
    return p;
}

inline MlpParams init_mlp(std::initializer_list<std::size_t> widths, SeededRng& rng) {
    std::vector<std::size_t> w(widths);
    return init_mlp(std::span<const std::size_t>(w), rng);
}

/// Gate biases zero except the forget gate, which starts at 1.
inline LstmParams init_lstm(std::size_t input, std::size_t hidden, SeededRng& rng) {
    LstmParams p{init_weight(4 * hidden, input, rng), init_weight(4 * hidden, hidden, rng), Tensor({4 * hidden})};
    for (std::size_t k = 0; k < hidden; ++k) p.bias[hidden + k] = 1.0;
    return p;
}

inline BiLstmParams init_bilstm(std::size_t input, std::size_t hidden, SeededRng& rng) {
    LstmParams f = init_lstm(input, hidden, rng);
    LstmParams b = init_lstm(input, hidden, rng);
    return {std::move(f), std::move(b)};
}

inline SeqBaseParams init_seq_base(std::size_t drivers, std::size_t input_width, std::size_t hidden, SeededRng& rng) {
    Affine in = init_affine(drivers, input_width, rng);
    LstmParams lstm = init_lstm(input_width, hidden, rng);
    Affine head = init_affine(hidden, 1, rng);
    return {std::move(in), std::move(lstm), std::move(head)};
}

}  // namespace tamrl
