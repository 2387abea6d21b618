#pragma once

#include <span>
#include <vector>

#include "tamrl/episode.hpp"
#include "tamrl/modulation/task_encoder.hpp"
#include "tamrl/training/loss.hpp"
#include "tamrl/training/model.hpp"

namespace tamrl {

// Loss/gradient evaluations shared by pretraining, joint training, adaptation
// and the baselines. Set losses are (1/N) sum_i mse_i over the N samples.

template <BaseNetwork P>
struct BaseLossGrad {
    double loss = 0.0;
    P grad;
};

/// Unmodulated base on a sample set.
template <BaseNetwork P>
BaseLossGrad<P> base_set_gradient(const P& base, std::span<const Sample> samples) {
    BaseLossGrad<P> out{0.0, zeros_like_params(base)};
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        auto [pred, cache] = BaseOps<P>::forward(base, s.x);
        LossGrad lg = mse_loss(pred, s.y);
        out.loss += lg.value / n;
        axpy_params(1.0 / n, BaseOps<P>::backward(base, cache, lg.grad), out.grad);
    }
    return out;
}

template <BaseNetwork P>
double base_set_loss(const P& base, std::span<const Sample> samples) {
    double loss = 0.0;
    for (const auto& s : samples) loss += mse_loss(BaseOps<P>::forward(base, s.x).first, s.y).value;
    return loss / static_cast<double>(samples.size());
}

/// Modulated base (base weights + site values) on a sample set.
template <BaseNetwork P>
struct ModulatedLossGrad {
    double loss = 0.0;
    ModulatedBase<P> grad;
};

template <BaseNetwork P>
ModulatedLossGrad<P> modulated_set_gradient(const ModulatedBase<P>& model, std::span<const Sample> samples) {
    ModulatedLossGrad<P> out{0.0, zeros_like_params(model)};
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        auto [pred, cache] = BaseOps<P>::modulated_forward(model.base, model.film.sites, s.x);
        LossGrad lg = mse_loss(pred, s.y);
        out.loss += lg.value / n;
        auto [dp, ds] = BaseOps<P>::modulated_backward(model.base, model.film.sites, cache, lg.grad);
        axpy_params(1.0 / n, dp, out.grad.base);
        axpy_params(1.0 / n, FilmSites{std::move(ds)}, out.grad.film);
    }
    return out;
}

template <BaseNetwork P>
double modulated_set_loss(const ModulatedBase<P>& model, std::span<const Sample> samples) {
    double loss = 0.0;
    for (const auto& s : samples) loss += mse_loss(model.forward(s.x), s.y).value;
    return loss / static_cast<double>(samples.size());
}

/// Query loss of one episode under the full model. The encoder only ever
/// sees the support samples.
template <BaseNetwork P>
double episode_loss(const TamrlParams<P>& params, const TaskEpisode& e) {
    check_episode(e);
    const Tensor z = encode_task(params.encoder, e.support);
    const auto sites = generate_modulation(params.generator, z);
    const ModulatedBase<P> model{params.base, FilmSites{sites}};
    return modulated_set_loss(model, e.query);
}

template <BaseNetwork P>
struct EpisodeGrad {
    double loss = 0.0;
    TamrlParams<P> grad;
};

/// Gradient of the query loss w.r.t. base, generator and encoder jointly.
template <BaseNetwork P>
EpisodeGrad<P> episode_gradient(const TamrlParams<P>& params, const TaskEpisode& e) {
    check_episode(e);
    auto [z, enc_cache] = encode_task_cached(params.encoder, e.support);
    const auto sites = generate_modulation(params.generator, z);
    check_sites(BaseOps<P>::sites(params.base), sites);

    EpisodeGrad<P> out;
    out.grad.base = zeros_like_params(params.base);
    std::vector<FilmSite> d_sites;
    for (const auto& s : sites) d_sites.push_back(FilmSite{s.spec, zeros_like(s.gamma), zeros_like(s.beta)});

    const double n = static_cast<double>(e.query.size());
    for (const auto& q : e.query) {
        auto [pred, cache] = BaseOps<P>::modulated_forward(params.base, sites, q.x);
        LossGrad lg = mse_loss(pred, q.y);
        out.loss += lg.value / n;
        auto [dp, ds] = BaseOps<P>::modulated_backward(params.base, sites, cache, scaled(lg.grad, 1.0 / n));
        axpy_params(1.0, dp, out.grad.base);
        for (std::size_t i = 0; i < ds.size(); ++i) axpy_params(1.0, ds[i], d_sites[i]);
    }
    GeneratorGrads gg = generator_backward(params.generator, z, d_sites);
    out.grad.generator = std::move(gg.d_params);
    out.grad.encoder = encoder_backward(params.encoder, enc_cache, gg.d_z);
    return out;
}

}  // namespace tamrl
