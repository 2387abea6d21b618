#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tamrl/networks/layers.hpp"
#include "tamrl/networks/param_ops.hpp"

namespace tamrl {

/// Stack of affine layers, each followed by its own activation.
struct MlpParams {
    std::vector<Affine> layers;
    std::vector<Activation> activations;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_size() const { return layers.front().in(); }
    std::size_t output_size() const { return layers.back().out(); }

    void validate() const {
        if (layers.empty() || layers.size() != activations.size()) {
            throw ShapeError("MlpParams: need one activation per layer");
        }
        for (std::size_t l = 1; l < layers.size(); ++l) {
            if (layers[l].in() != layers[l - 1].out()) {
                throw ShapeError("MlpParams: layer " + std::to_string(l) + " input " +
                                 std::to_string(layers[l].in()) + " does not chain with previous output " +
                                 std::to_string(layers[l - 1].out()));
            }
        }
    }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "mlp") {
        for (std::size_t l = 0; l < layers.size(); ++l) layers[l].for_each_tensor(f, prefix + ".layer" + std::to_string(l));
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "mlp") const {
        for (std::size_t l = 0; l < layers.size(); ++l) layers[l].for_each_tensor(f, prefix + ".layer" + std::to_string(l));
    }

    bool operator==(const MlpParams&) const = default;
};

struct MlpCache {
    std::vector<Tensor> inputs;  // input to layer l
    std::vector<Tensor> pre;     // affine output of layer l
    std::vector<Tensor> post;    // activation output of layer l
};

struct MlpGrads {
    MlpParams d_params;
    Tensor d_x;
};

inline std::pair<Tensor, MlpCache> mlp_forward(const MlpParams& p, const Tensor& x) {
    p.validate();
    if (x.rank() != 2 || x.cols() != p.input_size()) {
        throw ShapeError("mlp_forward: input " + shape_str(x.shape()) + " but first layer expects " +
                         std::to_string(p.input_size()) + " columns");
    }
    MlpCache cache;
    cache.inputs.reserve(p.depth());
    Tensor h = x;
    for (std::size_t l = 0; l < p.depth(); ++l) {
        cache.inputs.push_back(h);
        Tensor a = affine_forward(p.layers[l], h);
        h = activate(p.activations[l], a);
        cache.pre.push_back(std::move(a));
        cache.post.push_back(h);
    }
    return {std::move(h), std::move(cache)};
}

inline MlpGrads mlp_backward(const MlpParams& p, const MlpCache& cache, const Tensor& dy) {
    if (cache.pre.size() != p.depth() || cache.post.empty()) {
        throw ShapeError("mlp_backward: cache has " + std::to_string(cache.pre.size()) + " layers, params have " +
                         std::to_string(p.depth()));
    }
    require_same_shape(cache.post.back(), dy, "mlp_backward upstream gradient");
    MlpGrads g{zeros_like_params(p), {}};
    Tensor d = dy;
    for (std::size_t l = p.depth(); l-- > 0;) {
        if (cache.pre[l].cols() != p.layers[l].out()) throw ShapeError("mlp_backward: stale cache");
        d = activation_backward(p.activations[l], cache.pre[l], cache.post[l], d);
        d = affine_backward(p.layers[l], cache.inputs[l], d, g.d_params.layers[l]);
    }
    g.d_x = std::move(d);
    return g;
}

}  // namespace tamrl
