#pragma once

#include <span>
#include <string>
#include <vector>

#include "tamrl/training/objective.hpp"

namespace tamrl {

enum class Variant { tamrl, tamrl_no_finetune, tamrl_no_pretrain, tamrl_no_finetune_no_pretrain, fomaml, base };

inline const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::tamrl,     Variant::tamrl_no_finetune,
                                        Variant::tamrl_no_pretrain, Variant::tamrl_no_finetune_no_pretrain,
                                        Variant::fomaml,    Variant::base};
    return v;
}

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::tamrl: return "tamrl";
        case Variant::tamrl_no_finetune: return "tamrl-no-finetune";
        case Variant::tamrl_no_pretrain: return "tamrl-no-pretrain";
        case Variant::tamrl_no_finetune_no_pretrain: return "tamrl-no-finetune-no-pretrain";
        case Variant::fomaml: return "fomaml";
        case Variant::base: return "base";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    for (auto v : all_variants()) {
        if (variant_name(v) == s) return v;
    }
    throw ConfigError("unknown variant '" + s + "'");
}

/// Variants that fine-tune on the support set at inference.
inline bool finetunes(Variant v) {
    return v == Variant::tamrl || v == Variant::tamrl_no_pretrain || v == Variant::fomaml;
}

/// Variants whose base network was pretrained before joint training.
inline bool pretrained(Variant v) {
    return v == Variant::tamrl || v == Variant::tamrl_no_finetune || v == Variant::base;
}

/// Variants that use the encoder/generator.
inline bool modulated(Variant v) { return v != Variant::fomaml && v != Variant::base; }

struct AdaptConfig {
    std::size_t num_inner_steps = 5;
    double inner_lr = 1e-3;
    Variant variant = Variant::tamrl;

    /// No-finetune variants (and the plain base) must run zero steps. A
    /// fine-tuning variant with zero steps is allowed and reduces exactly to
    /// its no-finetune counterpart.
    void validate() const {
        if (!finetunes(variant) && num_inner_steps != 0) {
            throw ConfigError("variant " + variant_name(variant) + " does not fine-tune; inner steps must be 0");
        }
        if (!(inner_lr >= 0.0)) throw ConfigError("inner learning rate must be non-negative");
    }

    /// Config for variant `v`, zeroing the steps where fine-tuning is off.
    static AdaptConfig for_variant(Variant v, std::size_t steps, double lr) {
        return AdaptConfig{finetunes(v) ? steps : 0, lr, v};
    }
};

/// theta'_j = theta (x) G(E(support)). The encoder and generator are read-only.
template <BaseNetwork P>
ModulatedBase<P> infer_modulated(const TamrlParams<P>& params, std::span<const Sample> support) {
    if (support.empty()) throw DataError("infer_modulated: empty support set");
    const Tensor z = encode_task(params.encoder, support);
    return modulate_base(params.base, generate_modulation(params.generator, z));
}

template <BaseNetwork P>
struct AdaptResult {
    ModulatedBase<P> model;
    std::vector<double> support_loss;  // before step 1, then after each step
};

/// Adam on every tensor of the modulated base (weights and site values),
/// minimizing the support MSE.
template <BaseNetwork P>
AdaptResult<P> adapt(ModulatedBase<P> model, std::span<const Sample> support, std::size_t steps, double lr) {
    if (support.empty()) throw DataError("adapt: empty support set");
    AdaptResult<P> out{std::move(model), {}};
    if (steps == 0) {
        out.support_loss.push_back(modulated_set_loss(out.model, support));
        return out;
    }
    auto slots = make_optimizer(out.model, lr);
    for (std::size_t k = 0; k < steps; ++k) {
        auto lg = modulated_set_gradient(out.model, support);
        require_finite_loss(lg.loss, "adapt step " + std::to_string(k + 1));
        out.support_loss.push_back(lg.loss);
        apply_adam(out.model, lg.grad, slots);
    }
    out.support_loss.push_back(modulated_set_loss(out.model, support));
    return out;
}

template <BaseNetwork P>
AdaptResult<P> adapt(ModulatedBase<P> model, std::span<const Sample> support, const AdaptConfig& cfg) {
    cfg.validate();
    return adapt(std::move(model), support, cfg.num_inner_steps, cfg.inner_lr);
}

/// Query drivers only; targets are never visible here.
template <BaseNetwork P>
Tensor predict(const ModulatedBase<P>& model, const Tensor& x) {
    return model.forward(x);
}

}  // namespace tamrl
