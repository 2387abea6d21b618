#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tamrl/experiment/setup.hpp"

namespace tamrl {

/// Everything a run trains and evaluates on.
struct ExperimentData {
    EpisodeSource source;
    std::vector<Sample> pooled;
    std::vector<TaskEpisode> eval;
};

inline ExperimentData synthetic_data(const ExperimentConfig& c) {
    auto train = synthetic::to_task_episodes(synthetic_train_tasks(c), "train");
    auto eval = synthetic::to_task_episodes(synthetic_eval_tasks(c), "eval");
    ExperimentData d;
    d.pooled = pool_samples(train);
    d.source = fixed_episodes(std::move(train));
    d.eval = std::move(eval);
    return d;
}

inline std::vector<TaskEpisode> series_eval_episodes(const ExperimentConfig& c) {
    const std::string path = c.dataset_eval_path.empty() ? c.dataset_path : c.dataset_eval_path;
    std::vector<TaskEpisode> out;
    for (const auto& s : load_entity_dir(path, c.schema)) out.push_back(few_shot_episode(s, c));
    return out;
}

inline ExperimentData series_data(const ExperimentConfig& c) {
    auto entities = window_entities(load_entity_dir(c.dataset_path, c.schema), c);
    ExperimentData d;
    d.pooled = series_pool(entities);
    d.source = series_episode_source(std::move(entities), c);
    d.eval = series_eval_episodes(c);
    return d;
}

inline ExperimentData experiment_data(const ExperimentConfig& c) {
    return c.dataset_kind == "synthetic" ? synthetic_data(c) : series_data(c);
}

/// Line-oriented progress sink.
using Logger = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Training stages, one ensemble member each.
// ---------------------------------------------------------------------------

template <BaseNetwork P>
ModelState<P> fresh_state(const ExperimentConfig& c, std::uint64_t seed) {
    ModelState<P> s;
    s.params = init_model<P>(model_arch(c), seed);
    s.seed = seed;
    return s;
}

/// Pretraining only: the unmodulated "base" variant.
template <BaseNetwork P>
std::pair<ModelState<P>, std::vector<double>> pretrain_stage(const ExperimentConfig& c, std::uint64_t seed,
                                                             std::span<const Sample> pooled, const Logger& log = {}) {
    ModelState<P> s = fresh_state<P>(c, seed);
    auto observe = [&](std::size_t e, double loss) {
        if (log) log("pretrain seed " + std::to_string(seed) + " epoch " + std::to_string(e + 1) + " loss " + csv::format_double(loss));
    };
    auto r = pretrain(s.params.base, pooled, train_config(c), seed, observe);
    s.params.base = std::move(r.base);
    s.pretrain_epochs = c.train_pretrain_epochs;
    return {std::move(s), std::move(r.epoch_loss)};
}

template <BaseNetwork P>
JointResult<P> joint_stage(ModelState<P> start, const EpisodeSource& source, const ExperimentConfig& c,
                           const Logger& log = {}) {
    const std::uint64_t seed = start.seed;
    auto observe = [&](std::size_t e, double loss) {
        if (log) log("joint seed " + std::to_string(seed) + " epoch " + std::to_string(e + 1) + " loss " + csv::format_double(loss));
    };
    return joint_train(std::move(start), source, train_config(c), observe);
}

/// FOMAML member, stored in a ModelState whose base holds the shared weights;
/// its encoder and generator stay at initialization and are never read.
template <BaseNetwork P>
std::pair<ModelState<P>, std::vector<double>> fomaml_stage(const ExperimentConfig& c, std::uint64_t seed,
                                                           const EpisodeSource& source, const Logger& log = {}) {
    ModelState<P> s = fresh_state<P>(c, seed);
    auto observe = [&](std::size_t e, double loss) {
        if (log) log("fomaml seed " + std::to_string(seed) + " epoch " + std::to_string(e + 1) + " loss " + csv::format_double(loss));
    };
    auto r = fomaml_train(s.params.base, source, fomaml_config(c), seed, observe);
    s.params.base = std::move(r.base);
    s.joint_epochs = fomaml_config(c).epochs;
    return {std::move(s), std::move(r.epoch_loss)};
}

// ---------------------------------------------------------------------------
// Full variant matrix.
// ---------------------------------------------------------------------------

template <BaseNetwork P>
struct SuiteResult {
    std::map<Variant, VariantPredictions> predictions;
    std::map<Variant, std::vector<double>> member_mse;  // mean query MSE per member
    std::vector<std::vector<double>> joint_loss_pretrained;  // [member][epoch]
    std::vector<std::vector<double>> joint_loss_fresh;

    double mean_mse(Variant v) const { return mean_of(member_mse.at(v)); }
};

/// Trains every member needed by `variants` and evaluates them on `data.eval`.
/// Members use seeds seed, seed + 1, ...
template <BaseNetwork P>
SuiteResult<P> run_suite(const ExperimentConfig& c, const ExperimentData& data, const std::vector<Variant>& variants,
                         const Logger& log = {}) {
    auto wants = [&](std::initializer_list<Variant> vs) {
        for (auto v : vs)
            for (auto w : variants)
                if (v == w) return true;
        return false;
    };
    const bool need_pretrain = wants({Variant::tamrl, Variant::tamrl_no_finetune, Variant::base});
    const bool need_joint_pre = wants({Variant::tamrl, Variant::tamrl_no_finetune});
    const bool need_fresh = wants({Variant::tamrl_no_pretrain, Variant::tamrl_no_finetune_no_pretrain});

    std::map<Variant, std::vector<ModelState<P>>> members;
    SuiteResult<P> out;
    for (auto seed : ensemble_seeds(c.seed, c.ensemble_size)) {
        if (need_pretrain) {
            auto [pre, curve] = pretrain_stage<P>(c, seed, data.pooled, log);
            members[Variant::base].push_back(pre);
            if (need_joint_pre) {
                auto jr = joint_stage(std::move(pre), data.source, c, log);
                members[Variant::tamrl].push_back(jr.state);
                members[Variant::tamrl_no_finetune].push_back(std::move(jr.state));
                out.joint_loss_pretrained.push_back(std::move(jr.epoch_loss));
            }
        }
        if (need_fresh) {
            auto jr = joint_stage(fresh_state<P>(c, seed), data.source, c, log);
            members[Variant::tamrl_no_pretrain].push_back(jr.state);
            members[Variant::tamrl_no_finetune_no_pretrain].push_back(std::move(jr.state));
            out.joint_loss_fresh.push_back(std::move(jr.epoch_loss));
        }
        if (wants({Variant::fomaml})) members[Variant::fomaml].push_back(fomaml_stage<P>(c, seed, data.source, log).first);
    }
    for (auto v : variants) {
        auto vp = predict_variant(members.at(v), data.eval, adapt_config(c, v));
        out.member_mse[v] = member_mse(vp, data.eval);
        if (log) log("eval " + variant_name(v) + " mean query mse " + csv::format_double(mean_of(out.member_mse[v])));
        out.predictions.emplace(v, std::move(vp));
    }
    return out;
}

/// Result rows for every evaluated variant, in the order given.
template <BaseNetwork P>
std::vector<ResultRow> suite_rows(const SuiteResult<P>& r, const std::vector<Variant>& variants,
                                  const std::vector<TaskEpisode>& eval, const std::string& label) {
    std::vector<ResultRow> rows;
    for (auto v : variants) {
        auto part = result_rows(r.predictions.at(v), eval, label);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

}  // namespace tamrl
