#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tamrl/modulation/film.hpp"
#include "tamrl/networks/mlp.hpp"
#include "tamrl/networks/seq_base.hpp"

namespace tamrl {

/// Per-architecture operations the trainer needs: plain and FiLM-modulated
/// forward/backward, plus the list of modulation sites.
template <class P>
struct BaseOps;

// ---------------------------------------------------------------------------
// MLP base: one site per layer, applied to the affine output before the
// activation.
// ---------------------------------------------------------------------------

struct ModulatedMlpCache {
    std::vector<Tensor> inputs;
    std::vector<Tensor> pre;
    std::vector<Tensor> modulated;
    std::vector<Tensor> post;
};

template <>
struct BaseOps<MlpParams> {
    using Cache = MlpCache;
    using ModCache = ModulatedMlpCache;

    static std::vector<SiteSpec> sites(const MlpParams& p) {
        std::vector<SiteSpec> out;
        for (std::size_t l = 0; l < p.depth(); ++l) out.push_back({SiteTag::mlp_layer, l, p.layers[l].out()});
        return out;
    }

    static std::size_t input_size(const MlpParams& p) { return p.input_size(); }

    static std::pair<Tensor, Cache> forward(const MlpParams& p, const Tensor& x) { return mlp_forward(p, x); }

    static MlpParams backward(const MlpParams& p, const Cache& c, const Tensor& dy) {
        return mlp_backward(p, c, dy).d_params;
    }

    static std::pair<Tensor, ModCache> modulated_forward(const MlpParams& p, const std::vector<FilmSite>& film,
                                                         const Tensor& x) {
        p.validate();
        if (x.rank() != 2 || x.cols() != p.input_size()) {
            throw ShapeError("modulated mlp: input " + shape_str(x.shape()) + " but first layer expects " +
                             std::to_string(p.input_size()) + " columns");
        }
        ModCache cache;
        Tensor h = x;
        for (std::size_t l = 0; l < p.depth(); ++l) {
            cache.inputs.push_back(h);
            Tensor a = affine_forward(p.layers[l], h);
            Tensor m = film_apply(film[l], a);
            h = activate(p.activations[l], m);
            cache.pre.push_back(std::move(a));
            cache.modulated.push_back(std::move(m));
            cache.post.push_back(h);
        }
        return {std::move(h), std::move(cache)};
    }

    static std::pair<MlpParams, std::vector<FilmSite>> modulated_backward(const MlpParams& p,
                                                                           const std::vector<FilmSite>& film,
                                                                           const ModCache& c, const Tensor& dy) {
        if (c.pre.size() != p.depth()) throw ShapeError("modulated mlp backward: stale cache");
        MlpParams dp = zeros_like_params(p);
        std::vector<FilmSite> ds;
        for (const auto& s : film) ds.push_back(FilmSite{s.spec, zeros_like(s.gamma), zeros_like(s.beta)});
        Tensor d = dy;
        for (std::size_t l = p.depth(); l-- > 0;) {
            d = activation_backward(p.activations[l], c.modulated[l], c.post[l], d);
            d = film_backward(film[l], c.pre[l], d, ds[l]);
            d = affine_backward(p.layers[l], c.inputs[l], d, dp.layers[l]);
        }
        return {std::move(dp), std::move(ds)};
    }
};

// ---------------------------------------------------------------------------
// Sequence base: sites after the input map and on the LSTM output at every
// timestep (before the head).
// ---------------------------------------------------------------------------

struct ModulatedSeqCache {
    Tensor x;
    Tensor u;
    Tensor u_mod;
    LstmCache lstm;
    Tensor h;
    Tensor h_mod;
};

template <>
struct BaseOps<SeqBaseParams> {
    using Cache = SeqBaseCache;
    using ModCache = ModulatedSeqCache;

    static std::vector<SiteSpec> sites(const SeqBaseParams& p) {
        return {{SiteTag::lstm_input, 0, p.input_width()}, {SiteTag::lstm_hidden, 0, p.hidden()}};
    }

    static std::size_t input_size(const SeqBaseParams& p) { return p.driver_size(); }

    static std::pair<Tensor, Cache> forward(const SeqBaseParams& p, const Tensor& x) { return seq_base_forward(p, x); }

    static SeqBaseParams backward(const SeqBaseParams& p, const Cache& c, const Tensor& dy) {
        return seq_base_backward(p, c, dy).d_params;
    }

    static std::pair<Tensor, ModCache> modulated_forward(const SeqBaseParams& p, const std::vector<FilmSite>& film,
                                                         const Tensor& x) {
        p.validate();
        ModCache c;
        c.x = x;
        c.u = affine_forward(p.input_map, x);
        c.u_mod = film_apply(film[0], c.u);
        auto [h, lc] = lstm_forward(p.lstm, c.u_mod);
        c.lstm = std::move(lc);
        c.h = std::move(h);
        c.h_mod = film_apply(film[1], c.h);
        Tensor y = affine_forward(p.head, c.h_mod);
        return {std::move(y), std::move(c)};
    }

    static std::pair<SeqBaseParams, std::vector<FilmSite>> modulated_backward(const SeqBaseParams& p,
                                                                               const std::vector<FilmSite>& film,
                                                                               const ModCache& c, const Tensor& dy) {
        SeqBaseParams dp = zeros_like_params(p);
        std::vector<FilmSite> ds;
        for (const auto& s : film) ds.push_back(FilmSite{s.spec, zeros_like(s.gamma), zeros_like(s.beta)});
        Tensor d = affine_backward(p.head, c.h_mod, dy, dp.head);
        d = film_backward(film[1], c.h, d, ds[1]);
        LstmGrads lg = lstm_backward(p.lstm, c.lstm, d);
        axpy_params(1.0, lg.d_params, dp.lstm);
        d = film_backward(film[0], c.u, lg.d_seq, ds[0]);
        affine_backward(p.input_map, c.x, d, dp.input_map);
        return {std::move(dp), std::move(ds)};
    }
};

template <class P>
concept BaseNetwork = requires { typename BaseOps<P>::ModCache; };

inline void check_sites(const std::vector<SiteSpec>& expected, const std::vector<FilmSite>& sites) {
    if (sites.size() != expected.size()) {
        throw ShapeError("modulate_base: architecture has " + std::to_string(expected.size()) + " modulation sites, got " +
                         std::to_string(sites.size()));
    }
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (!(sites[i].spec == expected[i]) || sites[i].gamma.size() != expected[i].width ||
            sites[i].beta.size() != expected[i].width) {
            throw ShapeError("modulate_base: site " + std::to_string(i) + " (" +
                             site_name(sites[i].spec.tag, sites[i].spec.layer) + ", width " +
                             std::to_string(sites[i].gamma.size()) + ") does not match expected " +
                             site_name(expected[i].tag, expected[i].layer) + " of width " +
                             std::to_string(expected[i].width));
        }
    }
}

/// theta' = base network with FiLM transforms inserted at every site. Both the
/// base weights and the (gamma, beta) values are parameters of theta'.
template <BaseNetwork P>
struct ModulatedBase {
    P base;
    FilmSites film;

    Tensor forward(const Tensor& x) const { return BaseOps<P>::modulated_forward(base, film.sites, x).first; }
    Tensor operator()(const Tensor& x) const { return forward(x); }

    template <class F>
    void for_each_tensor(F&& f) {
        base.for_each_tensor(f);
        film.for_each_tensor(f);
    }
    template <class F>
    void for_each_tensor(F&& f) const {
        base.for_each_tensor(f);
        film.for_each_tensor(f);
    }

    bool operator==(const ModulatedBase&) const = default;
};

template <BaseNetwork P>
ModulatedBase<P> modulate_base(P base, std::vector<FilmSite> sites) {
    check_sites(BaseOps<P>::sites(base), sites);
    return ModulatedBase<P>{std::move(base), FilmSites{std::move(sites)}};
}

template <BaseNetwork P>
ModulatedBase<P> identity_modulation(P base) {
    std::vector<FilmSite> sites;
    for (const auto& s : BaseOps<P>::sites(base)) sites.push_back(identity_site(s));
    return modulate_base(std::move(base), std::move(sites));
}

}  // namespace tamrl
