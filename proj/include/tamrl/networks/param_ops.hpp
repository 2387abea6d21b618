#pragma once

#include <string>
#include <vector>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

// Every parameter struct exposes for_each_tensor(f) visiting (name, Tensor&)
// in a fixed order. The helpers below are written against that protocol.

template <class P>
concept ParamPack = requires(P& p) { p.for_each_tensor([](const std::string&, Tensor&) {}); };

template <ParamPack P>
std::vector<Tensor*> tensor_refs(P& p) {
    std::vector<Tensor*> out;
    p.for_each_tensor([&](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
}

template <ParamPack P>
std::vector<const Tensor*> tensor_refs(const P& p) {
    std::vector<const Tensor*> out;
    p.for_each_tensor([&](const std::string&, const Tensor& t) { out.push_back(&t); });
    return out;
}

template <ParamPack P>
std::vector<std::string> tensor_names(const P& p) {
    std::vector<std::string> out;
    p.for_each_tensor([&](const std::string& name, const Tensor&) { out.push_back(name); });
    return out;
}

/// Structural copy with every tensor zeroed.
template <ParamPack P>
P zeros_like_params(const P& p) {
    P out = p;
    out.for_each_tensor([](const std::string&, Tensor& t) { t.fill(0.0); });
    return out;
}

/// dst += alpha * src, tensor by tensor.
template <ParamPack P>
void axpy_params(double alpha, const P& src, P& dst) {
    auto s = tensor_refs(src);
    auto d = tensor_refs(dst);
    if (s.size() != d.size()) throw ShapeError("axpy_params: parameter packs differ in structure");
    for (std::size_t i = 0; i < s.size(); ++i) axpy(alpha, *s[i], *d[i]);
}

template <ParamPack P>
void scale_params(P& p, double s) {
    p.for_each_tensor([&](const std::string&, Tensor& t) {
        for (auto& v : t.values()) v *= s;
    });
}

template <ParamPack P>
std::size_t param_count(const P& p) {
    std::size_t n = 0;
    p.for_each_tensor([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

/// All tensors concatenated into one vector, in visiting order.
template <ParamPack P>
Tensor flatten_params(const P& p) {
    std::vector<double> flat;
    flat.reserve(param_count(p));
    p.for_each_tensor([&](const std::string&, const Tensor& t) {
        flat.insert(flat.end(), t.values().begin(), t.values().end());
    });
    return Tensor::vector(std::move(flat));
}

/// Inverse of flatten_params, using `like` for structure.
template <ParamPack P>
P unflatten_params(const P& like, const Tensor& flat) {
    if (flat.size() != param_count(like)) throw ShapeError("unflatten_params: length mismatch");
    P out = like;
    std::size_t pos = 0;
    out.for_each_tensor([&](const std::string&, Tensor& t) {
        for (auto& v : t.values()) v = flat[pos++];
    });
    return out;
}

template <ParamPack P>
bool params_finite(const P& p) {
    bool ok = true;
    p.for_each_tensor([&](const std::string&, const Tensor& t) { ok = ok && all_finite(t); });
    return ok;
}

}  // namespace tamrl
