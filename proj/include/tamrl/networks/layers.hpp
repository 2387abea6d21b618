#pragma once

#include <string>
#include <vector>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

enum class Activation { identity, relu, tanh, sigmoid };

/// Fully connected layer y = x W^T + b, with W stored out x in.
struct Affine {
    Tensor weight;
    Tensor bias;

    std::size_t in() const { return weight.cols(); }
    std::size_t out() const { return weight.rows(); }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "affine") {
        f(prefix + ".weight", weight);
        f(prefix + ".bias", bias);
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "affine") const {
        f(prefix + ".weight", weight);
        f(prefix + ".bias", bias);
    }

    bool operator==(const Affine&) const = default;
};

/// x[B x in] -> [B x out]
inline Tensor affine_forward(const Affine& layer, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != layer.in()) {
        throw ShapeError("affine_forward: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(layer.weight.shape()));
    }
    Tensor y = matmul_nt(x, layer.weight);
    const std::size_t n = layer.out();
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* row = y.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += layer.bias[j];
    }
    return y;
}

/// Accumulates dW, db into `grad` and returns dx.
inline Tensor affine_backward(const Affine& layer, const Tensor& x, const Tensor& dy, Affine& grad) {
    if (dy.rank() != 2 || dy.cols() != layer.out() || dy.rows() != x.rows()) {
        throw ShapeError("affine_backward: upstream gradient " + shape_str(dy.shape()) +
                         " does not match layer output");
    }
    matmul_tn_acc(dy, x, grad.weight);
    for (std::size_t r = 0; r < dy.rows(); ++r)
        for (std::size_t j = 0; j < dy.cols(); ++j) grad.bias[j] += dy(r, j);
    return matmul(dy, layer.weight);
}

inline Tensor activate(Activation act, const Tensor& x) {
    switch (act) {
        case Activation::identity: return x;
        case Activation::relu: return elementwise(ElementwiseOp::relu, x);
        case Activation::tanh: return elementwise(ElementwiseOp::tanh, x);
        case Activation::sigmoid: return elementwise(ElementwiseOp::sigmoid, x);
    }
    return x;
}

/// Gradient through an activation given its input and output.
inline Tensor activation_backward(Activation act, const Tensor& pre, const Tensor& post, const Tensor& dy) {
    require_same_shape(pre, dy, "activation_backward");
    if (act == Activation::identity) return dy;
    Tensor dx = dy;
    auto d = dx.values();
    auto a = pre.values();
    auto y = post.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        switch (act) {
            case Activation::relu: d[i] = a[i] > 0.0 ? d[i] : 0.0; break;
            case Activation::tanh: d[i] *= 1.0 - y[i] * y[i]; break;
            case Activation::sigmoid: d[i] *= y[i] * (1.0 - y[i]); break;
            default: break;
        }
    }
    return dx;
}

inline const char* activation_name(Activation act) {
    switch (act) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

}  // namespace tamrl
