#pragma once

#include <string>
#include <vector>

#include "tamrl/numcore/tensor.hpp"

namespace tamrl {

enum class SiteTag { mlp_layer, lstm_input, lstm_hidden };

inline std::string site_name(SiteTag tag, std::size_t layer) {
    switch (tag) {
        case SiteTag::mlp_layer: return "mlp-layer-" + std::to_string(layer);
        case SiteTag::lstm_input: return "lstm-input";
        case SiteTag::lstm_hidden: return "lstm-hidden";
    }
    return "?";
}

/// Where a modulation site sits and how wide its activation is.
struct SiteSpec {
    SiteTag tag = SiteTag::mlp_layer;
    std::size_t layer = 0;
    std::size_t width = 0;

    bool operator==(const SiteSpec&) const = default;
};

/// Feature-wise affine transform h -> gamma * h + beta at one site.
struct FilmSite {
    SiteSpec spec;
    Tensor gamma;
    Tensor beta;

    std::size_t width() const { return gamma.size(); }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "site") {
        f(prefix + ".gamma", gamma);
        f(prefix + ".beta", beta);
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "site") const {
        f(prefix + ".gamma", gamma);
        f(prefix + ".beta", beta);
    }

    bool operator==(const FilmSite&) const = default;
};

inline FilmSite identity_site(SiteSpec spec) {
    return FilmSite{spec, Tensor({spec.width}, 1.0), Tensor({spec.width}, 0.0)};
}

/// Applies the site to a vector [d] or to every row of a matrix [B x d].
inline Tensor film_apply(const FilmSite& site, const Tensor& h) {
    const std::size_t d = site.width();
    if (site.beta.size() != d) throw ShapeError("film_apply: gamma and beta lengths differ");
    const std::size_t cols = h.rank() == 2 ? h.cols() : h.size();
    if (cols != d || h.rank() > 2) {
        throw ShapeError("film_apply: activation " + shape_str(h.shape()) + " vs site width " + std::to_string(d));
    }
    Tensor out = h;
    const std::size_t rows = h.size() / d;
    for (std::size_t r = 0; r < rows; ++r) {
        double* o = out.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) o[j] = site.gamma[j] * o[j] + site.beta[j];
    }
    return out;
}

/// Accumulates dgamma, dbeta into `grad`; returns dh.
inline Tensor film_backward(const FilmSite& site, const Tensor& h, const Tensor& dy, FilmSite& grad) {
    require_same_shape(h, dy, "film_backward");
    const std::size_t d = site.width();
    Tensor dh = dy;
    const std::size_t rows = h.size() / d;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* hr = h.data() + r * d;
        const double* dr = dy.data() + r * d;
        double* o = dh.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            grad.gamma[j] += dr[j] * hr[j];
            grad.beta[j] += dr[j];
            o[j] = dr[j] * site.gamma[j];
        }
    }
    return dh;
}

/// A list of sites viewed as one parameter pack (used by adaptation).
struct FilmSites {
    std::vector<FilmSite> sites;

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "film") {
        for (auto& s : sites) s.for_each_tensor(f, prefix + "." + site_name(s.spec.tag, s.spec.layer));
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "film") const {
        for (const auto& s : sites) s.for_each_tensor(f, prefix + "." + site_name(s.spec.tag, s.spec.layer));
    }

    bool operator==(const FilmSites&) const = default;
};

}  // namespace tamrl
