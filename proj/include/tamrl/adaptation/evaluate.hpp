#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tamrl/adaptation/adapt.hpp"
#include "tamrl/adaptation/fomaml.hpp"
#include "tamrl/io/metrics.hpp"
#include "tamrl/io/results.hpp"

namespace tamrl {

/// Query predictions of one episode, flattened over its query samples in order.
template <BaseNetwork P>
std::vector<double> predict_episode(const ModelState<P>& state, const TaskEpisode& e, const AdaptConfig& cfg) {
    cfg.validate();
    check_episode(e);
    std::vector<double> out;
    auto append = [&](const Tensor& t) { out.insert(out.end(), t.values().begin(), t.values().end()); };
    switch (cfg.variant) {
        case Variant::fomaml: {
            const P adapted = fomaml_adapt(state.params.base, e.support, cfg.num_inner_steps, cfg.inner_lr);
            for (const auto& q : e.query) append(BaseOps<P>::forward(adapted, q.x).first);
            break;
        }
        case Variant::base:
            for (const auto& q : e.query) append(BaseOps<P>::forward(state.params.base, q.x).first);
            break;
        default: {
            auto model = adapt(infer_modulated(state.params, e.support), e.support, cfg).model;
            for (const auto& q : e.query) append(predict(model, q.x));
            break;
        }
    }
    return out;
}

inline std::vector<double> query_targets(const TaskEpisode& e) {
    std::vector<double> out;
    for (const auto& q : e.query) out.insert(out.end(), q.y.values().begin(), q.y.values().end());
    return out;
}

/// Predictions for every episode; episodes are adapted independently.
template <BaseNetwork P>
std::vector<std::vector<double>> predict_episodes(const ModelState<P>& state, const std::vector<TaskEpisode>& episodes,
                                                  const AdaptConfig& cfg) {
    std::vector<std::vector<double>> out(episodes.size());
    parallel_for(episodes.size(), [&](std::size_t i) { out[i] = predict_episode(state, episodes[i], cfg); });
    return out;
}

/// Predictions of every ensemble member for one variant: preds[member][episode].
struct VariantPredictions {
    Variant variant = Variant::tamrl;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<std::vector<double>>> preds;
};

template <BaseNetwork P>
VariantPredictions predict_variant(const std::vector<ModelState<P>>& members, const std::vector<TaskEpisode>& episodes,
                                   const AdaptConfig& cfg) {
    VariantPredictions out{cfg.variant, {}, {}};
    for (const auto& m : members) {
        out.seeds.push_back(m.seed);
        out.preds.push_back(predict_episodes(m, episodes, cfg));
    }
    return out;
}

/// Mean over episodes of the query MSE for one member.
inline double mean_query_mse(const std::vector<std::vector<double>>& preds, const std::vector<TaskEpisode>& episodes) {
    if (preds.size() != episodes.size() || episodes.empty()) throw ShapeError("mean_query_mse: episode count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < episodes.size(); ++i) s += mse(preds[i], query_targets(episodes[i]));
    return s / static_cast<double>(episodes.size());
}

/// Per-member mean query MSE.
inline std::vector<double> member_mse(const VariantPredictions& vp, const std::vector<TaskEpisode>& episodes) {
    std::vector<double> out;
    for (const auto& p : vp.preds) out.push_back(mean_query_mse(p, episodes));
    return out;
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw ShapeError("mean_of: empty");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// One row per (episode, member) plus one "ensemble" row per episode scoring
/// the member-averaged prediction.
inline std::vector<ResultRow> result_rows(const VariantPredictions& vp, const std::vector<TaskEpisode>& episodes,
                                          const std::string& budget) {
    std::vector<ResultRow> rows;
    const std::string model = variant_name(vp.variant);
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        const auto target = query_targets(episodes[i]);
        std::vector<std::vector<double>> members;
        for (std::size_t k = 0; k < vp.preds.size(); ++k) {
            rows.push_back({episodes[i].id, budget, model, std::to_string(vp.seeds[k]), rmse(vp.preds[k][i], target)});
            members.push_back(vp.preds[k][i]);
        }
        rows.push_back({episodes[i].id, budget, model, "ensemble", ensemble_rmse(members, target)});
    }
    return rows;
}

}  // namespace tamrl
