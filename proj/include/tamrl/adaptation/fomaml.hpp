#pragma once

#include <span>
#include <vector>

#include "tamrl/training/trainer.hpp"

namespace tamrl {

// First-order MAML baseline: one shared base, adapted per task by a few SGD
// steps on the support set; the outer update uses the query gradient at the
// adapted weights and ignores second-order terms.

struct FomamlConfig {
    std::size_t inner_steps = 5;
    double inner_lr = 0.01;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double outer_lr = 1e-3;

    void validate() const {
        if (batch_size < 1) throw ConfigError("fomaml: batch size must be positive");
        if (!(inner_lr >= 0.0) || !(outer_lr >= 0.0)) throw ConfigError("fomaml: learning rates must be non-negative");
    }
};

/// Plain SGD on the support MSE.
template <BaseNetwork P>
P fomaml_adapt(P base, std::span<const Sample> support, std::size_t steps, double lr) {
    if (support.empty()) throw DataError("fomaml_adapt: empty support set");
    for (std::size_t k = 0; k < steps; ++k) {
        auto lg = base_set_gradient(base, support);
        require_finite_loss(lg.loss, "fomaml inner step " + std::to_string(k + 1));
        axpy_params(-lr, lg.grad, base);
    }
    return base;
}

/// Query loss and first-order outer gradient for one episode.
template <BaseNetwork P>
BaseLossGrad<P> fomaml_episode_gradient(const P& base, const TaskEpisode& e, std::size_t inner_steps, double inner_lr) {
    check_episode(e);
    const P adapted = fomaml_adapt(base, e.support, inner_steps, inner_lr);
    return base_set_gradient(adapted, e.query);
}

template <BaseNetwork P>
struct FomamlResult {
    P base;
    std::vector<double> epoch_loss;
};

/// Outer loop with Adam. Batch order per epoch derives from (seed, epoch) as in
/// joint training.
template <BaseNetwork P>
FomamlResult<P> fomaml_train(P base, const EpisodeSource& source, const FomamlConfig& cfg, std::uint64_t seed,
                             const EpochObserver& observe = {}) {
    cfg.validate();
    FomamlResult<P> out{std::move(base), {}};
    auto slots = make_optimizer(out.base, cfg.outer_lr);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<TaskEpisode> episodes = source(epoch);
        if (episodes.empty()) throw DataError("fomaml_train: episode source returned nothing");
        SeededRng rng(SeededRng::derive(SeededRng::derive(seed, streams::joint), epoch));
        const auto batches = make_batches(episodes.size(), cfg.batch_size, rng);
        double total = 0.0;
        for (const auto& idx : batches) {
            P grad = zeros_like_params(out.base);
            double loss = 0.0;
            const double n = static_cast<double>(idx.size());
            ordered_reduce(
                idx.size(),
                [&](std::size_t i) { return fomaml_episode_gradient(out.base, episodes[idx[i]], cfg.inner_steps, cfg.inner_lr); },
                [&](BaseLossGrad<P>&& p) {
                    loss += p.loss / n;
                    axpy_params(1.0 / n, p.grad, grad);
                });
            require_finite_loss(loss, "fomaml epoch " + std::to_string(epoch + 1));
            apply_adam(out.base, grad, slots);
            total += loss;
        }
        out.epoch_loss.push_back(total / static_cast<double>(batches.size()));
        if (observe) observe(epoch, out.epoch_loss.back());
    }
    return out;
}

}  // namespace tamrl
