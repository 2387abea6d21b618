#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tamrl/training/objective.hpp"
#include "tamrl/training/parallel.hpp"

namespace tamrl {

struct TrainConfig {
    std::size_t pretrain_epochs = 20;
    std::size_t joint_epochs = 30;
    std::size_t batch_size = 64;
    std::size_t pretrain_batch_size = 64;
    double lr = 1e-3;

    void validate() const {
        if (batch_size < 1 || pretrain_batch_size < 1) throw ConfigError("TrainConfig: batch sizes must be positive");
        if (!(lr >= 0.0)) throw ConfigError("TrainConfig: learning rate must be non-negative");
    }
};

/// Called after each epoch with (epoch index, mean loss).
using EpochObserver = std::function<void(std::size_t, double)>;

/// Batches of indices over a shuffled order.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, SeededRng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch_size) {
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pretraining: plain regression of the base network on pooled samples.
// ---------------------------------------------------------------------------

template <BaseNetwork P>
struct PretrainResult {
    P base;
    std::vector<double> epoch_loss;
};

template <BaseNetwork P>
PretrainResult<P> pretrain(P base, std::span<const Sample> pooled, const TrainConfig& cfg, std::uint64_t seed,
                           const EpochObserver& observe = {}) {
    cfg.validate();
    if (pooled.empty()) throw DataError("pretrain: pooled dataset is empty");
    PretrainResult<P> out{std::move(base), {}};
    auto slots = make_optimizer(out.base, cfg.lr);
    for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        SeededRng rng(SeededRng::derive(SeededRng::derive(seed, streams::pretrain), epoch));
        const auto batches = make_batches(pooled.size(), cfg.pretrain_batch_size, rng);
        double total = 0.0;
        for (const auto& batch : batches) {
            P grad = zeros_like_params(out.base);
            double loss = 0.0;
            const double n = static_cast<double>(batch.size());
            ordered_reduce(
                batch.size(), [&](std::size_t i) { return base_set_gradient(out.base, pooled.subspan(batch[i], 1)); },
                [&](BaseLossGrad<P>&& p) {
                    loss += p.loss / n;
                    axpy_params(1.0 / n, p.grad, grad);
                });
            require_finite_loss(loss, "pretrain epoch " + std::to_string(epoch + 1));
            apply_adam(out.base, grad, slots);
            total += loss;
        }
        out.epoch_loss.push_back(total / static_cast<double>(batches.size()));
        if (observe) observe(epoch, out.epoch_loss.back());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Joint training of base, encoder and generator on query loss.
// ---------------------------------------------------------------------------

/// Episodes for a given epoch; lets time-series sources resample support
/// windows every epoch while synthetic sources return a fixed set.
using EpisodeSource = std::function<std::vector<TaskEpisode>(std::size_t epoch)>;

inline EpisodeSource fixed_episodes(std::vector<TaskEpisode> episodes) {
    auto shared = std::make_shared<const std::vector<TaskEpisode>>(std::move(episodes));
    return [shared](std::size_t) { return *shared; };
}

/// Mean query loss and mean gradient over a batch; the reduction runs in
/// batch order regardless of how many workers computed the parts.
template <BaseNetwork P>
EpisodeGrad<P> batch_gradient(const TamrlParams<P>& params, std::span<const TaskEpisode* const> batch) {
    EpisodeGrad<P> out{0.0, zeros_like_params(params)};
    const double n = static_cast<double>(batch.size());
    ordered_reduce(
        batch.size(), [&](std::size_t i) { return episode_gradient(params, *batch[i]); },
        [&](EpisodeGrad<P>&& p) {
            out.loss += p.loss / n;
            axpy_params(1.0 / n, p.grad, out.grad);
        });
    return out;
}

/// One optimizer update on (theta, phi_tau, phi_z). Returns the new state and
/// the batch loss measured before the update.
template <BaseNetwork P>
std::pair<ModelState<P>, double> joint_step(ModelState<P> state, std::span<const TaskEpisode* const> batch, double lr) {
    if (batch.empty()) throw DataError("joint_step: empty batch");
    if (state.optimizer.empty()) state.optimizer = make_optimizer(state.params, lr);
    EpisodeGrad<P> g = batch_gradient(state.params, batch);
    apply_adam(state.params, g.grad, state.optimizer);
    ++state.steps;
    return {std::move(state), g.loss};
}

template <BaseNetwork P>
struct JointResult {
    ModelState<P> state;
    std::vector<double> epoch_loss;
};

/// Continues from state.joint_epochs up to cfg.joint_epochs. Episode order in
/// epoch k depends only on (seed, k), so a restored checkpoint resumes exactly.
template <BaseNetwork P>
JointResult<P> joint_train(ModelState<P> state, const EpisodeSource& source, const TrainConfig& cfg,
                           const EpochObserver& observe = {}) {
    cfg.validate();
    JointResult<P> out{std::move(state), {}};
    for (std::size_t epoch = out.state.joint_epochs; epoch < cfg.joint_epochs; ++epoch) {
        const std::vector<TaskEpisode> episodes = source(epoch);
        if (episodes.empty()) throw DataError("joint_train: episode source returned nothing");
        for (const auto& e : episodes) check_episode(e);
        SeededRng rng(SeededRng::derive(SeededRng::derive(out.state.seed, streams::joint), epoch));
        const auto batches = make_batches(episodes.size(), cfg.batch_size, rng);
        double total = 0.0;
        for (const auto& idx : batches) {
            std::vector<const TaskEpisode*> batch;
            for (auto i : idx) batch.push_back(&episodes[i]);
            auto [next, loss] = joint_step(std::move(out.state), std::span<const TaskEpisode* const>(batch), cfg.lr);
            require_finite_loss(loss, "joint training epoch " + std::to_string(epoch + 1));
            out.state = std::move(next);
            total += loss;
        }
        ++out.state.joint_epochs;
        out.epoch_loss.push_back(total / static_cast<double>(batches.size()));
        if (observe) observe(epoch, out.epoch_loss.back());
    }
    return out;
}

/// Member k of an ensemble uses seed base_seed + k.
inline std::vector<std::uint64_t> ensemble_seeds(std::uint64_t base_seed, std::size_t n) {
    if (n < 1) throw ConfigError("ensemble size must be at least 1");
    std::vector<std::uint64_t> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(base_seed + k);
    return out;
}

/// Pools every support and query sample of every episode.
inline std::vector<Sample> pool_samples(const std::vector<TaskEpisode>& episodes) {
    std::vector<Sample> out;
    for (const auto& e : episodes) {
        out.insert(out.end(), e.support.begin(), e.support.end());
        out.insert(out.end(), e.query.begin(), e.query.end());
    }
    return out;
}

/// Fresh init (seeded by `seed`), optional pretraining, then joint training.
template <BaseNetwork P>
struct TrainRun {
    ModelState<P> state;
    std::vector<double> pretrain_loss;
    std::vector<double> joint_loss;
};

template <BaseNetwork P>
TrainRun<P> train_member(const ModelArch& arch, std::uint64_t seed, bool with_pretrain, std::span<const Sample> pooled,
                         const EpisodeSource& source, const TrainConfig& cfg) {
    TrainRun<P> run;
    run.state.seed = seed;
    run.state.params = init_model<P>(arch, seed);
    if (with_pretrain) {
        auto pr = pretrain(run.state.params.base, pooled, cfg, seed);
        run.state.params.base = std::move(pr.base);
        run.state.pretrain_epochs = cfg.pretrain_epochs;
        run.pretrain_loss = std::move(pr.epoch_loss);
    }
    auto jr = joint_train(std::move(run.state), source, cfg);
    run.state = std::move(jr.state);
    run.joint_loss = std::move(jr.epoch_loss);
    return run;
}

/// Independent members differing only in their seed.
template <BaseNetwork P>
std::vector<TrainRun<P>> train_ensemble(const ModelArch& arch, std::uint64_t base_seed, std::size_t n_seeds,
                                        bool with_pretrain, std::span<const Sample> pooled, const EpisodeSource& source,
                                        const TrainConfig& cfg) {
    std::vector<TrainRun<P>> out;
    for (auto s : ensemble_seeds(base_seed, n_seeds)) out.push_back(train_member<P>(arch, s, with_pretrain, pooled, source, cfg));
    return out;
}

}  // namespace tamrl
