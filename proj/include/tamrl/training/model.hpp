#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tamrl/modulation/generator.hpp"
#include "tamrl/modulation/modulated_base.hpp"
#include "tamrl/networks/init.hpp"
#include "tamrl/numcore/adam.hpp"

namespace tamrl {

/// Architecture sizes. `drivers` is the input width per timestep / point.
struct ModelArch {
    std::size_t drivers = 1;
    std::size_t base_hidden = 100;
    std::size_t base_layers = 4;  // MLP: number of affine layers
    std::size_t input_width = 100;  // sequence base: width of the input map f_d
    std::size_t encoder_hidden = 40;
};

/// Base network theta, encoder phi_z and generator phi_tau.
template <BaseNetwork P>
struct TamrlParams {
    P base;
    BiLstmParams encoder;
    GeneratorParams generator;

    template <class F>
    void for_each_tensor(F&& f) {
        base.for_each_tensor(f);
        encoder.for_each_tensor(f);
        generator.for_each_tensor(f);
    }
    template <class F>
    void for_each_tensor(F&& f) const {
        base.for_each_tensor(f);
        encoder.for_each_tensor(f);
        generator.for_each_tensor(f);
    }

    bool operator==(const TamrlParams&) const = default;
};

template <BaseNetwork P>
P init_base(const ModelArch& arch, SeededRng& rng);

template <>
inline MlpParams init_base<MlpParams>(const ModelArch& arch, SeededRng& rng) {
    if (arch.base_layers < 1) throw ShapeError("init_base: need at least one layer");
    std::vector<std::size_t> widths{arch.drivers};
    for (std::size_t l = 1; l < arch.base_layers; ++l) widths.push_back(arch.base_hidden);
    widths.push_back(1);
    return init_mlp(std::span<const std::size_t>(widths), rng);
}

template <>
inline SeqBaseParams init_base<SeqBaseParams>(const ModelArch& arch, SeededRng& rng) {
    return init_seq_base(arch.drivers, arch.input_width, arch.base_hidden, rng);
}

/// Sub-stream indices under a member seed.
namespace streams {
inline constexpr std::uint64_t base_init = 1;
inline constexpr std::uint64_t modulation_init = 2;
inline constexpr std::uint64_t pretrain = 3;
inline constexpr std::uint64_t joint = 4;
inline constexpr std::uint64_t episodes = 5;
}  // namespace streams

/// Modulation network sized for `base`; encoder reads [x ; y] rows.
template <BaseNetwork P>
TamrlParams<P> init_modulation(P base, const ModelArch& arch, SeededRng& rng) {
    BiLstmParams enc = init_bilstm(arch.drivers + 1, arch.encoder_hidden, rng);
    GeneratorParams gen = init_generator(BaseOps<P>::sites(base), arch.encoder_hidden, rng);
    return TamrlParams<P>{std::move(base), std::move(enc), std::move(gen)};
}

template <BaseNetwork P>
TamrlParams<P> init_model(const ModelArch& arch, std::uint64_t seed) {
    SeededRng base_rng(SeededRng::derive(seed, streams::base_init));
    SeededRng mod_rng(SeededRng::derive(seed, streams::modulation_init));
    return init_modulation(init_base<P>(arch, base_rng), arch, mod_rng);
}

/// Everything needed to resume training bit-identically.
template <BaseNetwork P>
struct ModelState {
    TamrlParams<P> params;
    std::vector<AdamState> optimizer;  // one per tensor of params; empty before joint training
    std::uint64_t seed = 0;
    std::size_t pretrain_epochs = 0;
    std::size_t joint_epochs = 0;
    std::size_t steps = 0;

    bool operator==(const ModelState&) const = default;
};

/// Fresh Adam slots, one per tensor of `pack`.
template <ParamPack Pack>
std::vector<AdamState> make_optimizer(const Pack& pack, double lr) {
    std::vector<AdamState> out;
    pack.for_each_tensor([&](const std::string&, const Tensor& t) { out.push_back(AdamState::for_params(t, {lr})); });
    return out;
}

/// Applies one Adam step to every tensor of `pack` using the matching slot.
template <ParamPack Pack>
void apply_adam(Pack& pack, const Pack& grads, std::vector<AdamState>& slots) {
    auto p = tensor_refs(pack);
    auto g = tensor_refs(grads);
    if (p.size() != g.size() || p.size() != slots.size()) {
        throw ShapeError("apply_adam: " + std::to_string(p.size()) + " tensors, " + std::to_string(g.size()) +
                         " gradients, " + std::to_string(slots.size()) + " optimizer slots");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto [np, ns] = adam_step(*p[i], *g[i], slots[i]);
        *p[i] = std::move(np);
        slots[i] = std::move(ns);
    }
}

}  // namespace tamrl
