#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tamrl/adaptation/evaluate.hpp"
#include "tamrl/io/manifest.hpp"
#include "tamrl/io/windows.hpp"
#include "tamrl/synthetic/tasks.hpp"

namespace tamrl {

// Typed views of an ExperimentConfig and the data each run consumes.

inline ModelArch model_arch(const ExperimentConfig& c) {
    ModelArch a;
    a.drivers = c.dataset_kind == "synthetic" ? 1 : c.schema.drivers.size();
    a.base_hidden = c.model_base_hidden;
    a.base_layers = c.model_base_layers;
    a.input_width = c.input_width();
    a.encoder_hidden = c.model_encoder_hidden;
    return a;
}

inline TrainConfig train_config(const ExperimentConfig& c) {
    TrainConfig t;
    t.pretrain_epochs = c.train_pretrain_epochs;
    t.joint_epochs = c.train_joint_epochs;
    t.batch_size = c.train_batch_size;
    t.pretrain_batch_size = c.train_pretrain_batch_size;
    t.lr = c.train_lr;
    return t;
}

inline FomamlConfig fomaml_config(const ExperimentConfig& c) {
    FomamlConfig f;
    f.inner_steps = c.fomaml_inner_steps;
    f.inner_lr = c.fomaml_inner_lr;
    f.epochs = c.fomaml_epoch_count();
    f.batch_size = c.train_batch_size;
    f.outer_lr = c.train_lr;
    return f;
}

/// FOMAML adapts with its own SGD settings; every other variant uses adapt.*.
inline AdaptConfig adapt_config(const ExperimentConfig& c, Variant v) {
    if (v == Variant::fomaml) return AdaptConfig::for_variant(v, c.fomaml_inner_steps, c.fomaml_inner_lr);
    return AdaptConfig::for_variant(v, c.adapt_steps, c.adapt_lr);
}

inline synthetic::EpisodeConfig episode_config(const ExperimentConfig& c) {
    synthetic::EpisodeConfig e;
    e.support_size = c.synthetic_support_size;
    e.query_size = c.synthetic_query_size;
    e.noise_std = c.synthetic_noise_std;
    e.x_min = c.synthetic_x_min;
    e.x_max = c.synthetic_x_max;
    return e;
}

inline synthetic::ModeSet mode_set(const ExperimentConfig& c) { return synthetic::parse_mode_set(c.synthetic_set); }

/// Data sub-streams under the experiment seed. Training and evaluation tasks
/// never share a stream.
namespace data_streams {
inline constexpr std::uint64_t synthetic_train = 1;
inline constexpr std::uint64_t synthetic_eval = 2;
inline constexpr std::uint64_t series_episodes = 3;
}  // namespace data_streams

inline std::vector<synthetic::RegressionEpisode> synthetic_train_tasks(const ExperimentConfig& c) {
    return synthetic::build_mode_set(mode_set(c), c.synthetic_train_tasks_per_mode,
                                     SeededRng::derive(c.seed, data_streams::synthetic_train), episode_config(c));
}

inline std::vector<synthetic::RegressionEpisode> synthetic_eval_tasks(const ExperimentConfig& c) {
    return synthetic::build_mode_set(mode_set(c), c.synthetic_eval_tasks_per_mode,
                                     SeededRng::derive(c.seed, data_streams::synthetic_eval), episode_config(c));
}

// ---------------------------------------------------------------------------
// Entity series
// ---------------------------------------------------------------------------

struct WindowedEntity {
    EntitySeries series;
    std::vector<SlidingWindow> windows;
};

inline std::vector<WindowedEntity> window_entities(std::vector<EntitySeries> entities, const ExperimentConfig& c) {
    std::vector<WindowedEntity> out;
    for (auto& s : entities) {
        auto w = make_windows(s, c.window_length, c.window_stride);
        out.push_back({std::move(s), std::move(w)});
    }
    return out;
}

/// support.windows > 0 draws that many support windows (capped so one query
/// window remains); 0 falls back to support.fraction.
inline WindowSplit draw_split(std::size_t n_windows, const ExperimentConfig& c, SeededRng& rng) {
    if (c.support_windows == 0) return split_support_query(n_windows, c.support_fraction, rng);
    if (n_windows < 2) throw DataError("split_support_query: need at least 2 windows, got " + std::to_string(n_windows));
    return split_by_count(n_windows, std::min(c.support_windows, n_windows - 1), rng);
}

/// Training episodes for epoch k: the support windows of every entity are
/// redrawn each epoch from (seed, k, entity, draw).
inline EpisodeSource series_episode_source(std::vector<WindowedEntity> entities, const ExperimentConfig& c) {
    for (const auto& e : entities) {
        if (e.windows.size() < 2) {
            throw DataError(e.series.entity_id + ": " + std::to_string(e.windows.size()) +
                            " window(s); training needs at least 2 (support and query)");
        }
    }
    auto shared = std::make_shared<const std::vector<WindowedEntity>>(std::move(entities));
    return [shared, c](std::size_t epoch) {
        std::vector<TaskEpisode> out;
        const std::uint64_t epoch_seed =
            SeededRng::derive(SeededRng::derive(c.seed, data_streams::series_episodes), epoch);
        for (std::size_t i = 0; i < shared->size(); ++i) {
            const auto& ent = (*shared)[i];
            for (std::size_t r = 0; r < c.train_episodes_per_entity; ++r) {
                SeededRng rng(SeededRng::derive(epoch_seed, i * c.train_episodes_per_entity + r));
                TaskEpisode e = window_episode(ent.series, ent.windows, draw_split(ent.windows.size(), c, rng));
                e.label = ent.series.entity_id;
                out.push_back(std::move(e));
            }
        }
        return out;
    };
}

/// Pretraining pool: every window of every training entity.
inline std::vector<Sample> series_pool(const std::vector<WindowedEntity>& entities) {
    std::vector<Sample> out;
    for (const auto& e : entities)
        for (const auto& w : e.windows) out.push_back(window_sample(e.series, w));
    return out;
}

/// Evaluation episode for a new entity: windows inside the first
/// `few_shot_length` steps form the support set, windows wholly after it the
/// query set.
inline TaskEpisode few_shot_episode(const EntitySeries& s, const ExperimentConfig& c) {
    const std::size_t n = c.dataset_few_shot_length;
    if (n >= s.length()) {
        throw DataError(s.entity_id + ": few-shot length " + std::to_string(n) + " leaves no query data (series length " +
                        std::to_string(s.length()) + ")");
    }
    const auto support_w = make_windows(n, c.window_length, c.window_stride);
    TaskEpisode e;
    e.id = s.entity_id;
    e.label = s.entity_id;
    for (const auto& w : support_w) e.support.push_back(window_sample(s, w));
    for (const auto& w : make_windows(s.length() - n, c.window_length, c.window_stride))
        e.query.push_back(window_sample(s, {w.start + n, w.length}));
    return e;
}

inline std::string budget_label(const ExperimentConfig& c) {
    if (!c.dataset_budget.empty()) return c.dataset_budget;
    if (c.dataset_kind == "synthetic") return std::to_string(c.synthetic_support_size) + "-shot";
    return std::to_string(c.dataset_few_shot_length);
}

/// Evaluation set tag used in result rows: "SETn" or the budget label.
inline std::string eval_label(const ExperimentConfig& c) {
    return c.dataset_kind == "synthetic" ? synthetic::set_name(mode_set(c)) : budget_label(c);
}

}  // namespace tamrl
