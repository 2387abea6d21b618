#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tamrl/numcore/finite_diff.hpp"
#include "tamrl/training/objective.hpp"

namespace tamrl {

// Finite-difference checks of every hand-written backward pass. Each
// component draws random shapes and values per instance and reports the
// largest relative error over its instances.

struct GradcheckOptions {
    std::size_t instances = 20;
    double eps = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 2024;
    std::string corrupt;  // test hook: component whose analytic gradient is perturbed
};

struct ComponentReport {
    std::string name;
    std::size_t instances = 0;
    double max_rel_error = 0.0;

    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

namespace gradcheck_detail {

inline Tensor random_tensor(Shape shape, SeededRng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(-scale, scale);
    return t;
}

inline std::size_t draw_size(SeededRng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.index(hi - lo + 1));
}

/// sum(w * y): a scalar probe with upstream gradient w.
inline double project(const Tensor& y, const Tensor& w) { return dot(y, w); }

template <ParamPack P>
double pack_error(const P& at, const P& analytic, const std::function<double(const P&)>& f, double eps) {
    const Tensor flat = flatten_params(at);
    const Tensor numeric = finite_diff_grad([&](const Tensor& v) { return f(unflatten_params(at, v)); }, flat, eps);
    return relative_error(flatten_params(analytic), numeric);
}

inline double tensor_error(const Tensor& at, const Tensor& analytic, const std::function<double(const Tensor&)>& f,
                           double eps) {
    return relative_error(analytic, finite_diff_grad(f, at, eps));
}

/// The corruption hook scales one coordinate of the first analytic tensor.
template <ParamPack P>
void maybe_corrupt(P& grad, bool on) {
    if (!on) return;
    bool done = false;
    grad.for_each_tensor([&](const std::string&, Tensor& t) {
        if (!done && !t.empty()) {
            t[0] = t[0] * 1.5 + 0.1;
            done = true;
        }
    });
}

inline MlpParams random_mlp(SeededRng& rng) {
    const std::size_t layers = draw_size(rng, 2, 4);
    std::vector<std::size_t> widths{draw_size(rng, 1, 3)};
    for (std::size_t l = 1; l < layers; ++l) widths.push_back(draw_size(rng, 2, 6));
    widths.push_back(1);
    MlpParams p = init_mlp(std::span<const std::size_t>(widths), rng);
    for (auto& l : p.layers) l.bias = random_tensor(l.bias.shape(), rng, 0.5);
    return p;
}

inline SeqBaseParams random_seq_base(SeededRng& rng) {
    SeqBaseParams p = init_seq_base(draw_size(rng, 1, 3), draw_size(rng, 2, 4), draw_size(rng, 2, 4), rng);
    p.lstm.bias = random_tensor(p.lstm.bias.shape(), rng, 0.5);
    return p;
}

}  // namespace gradcheck_detail

inline ComponentReport check_mlp(const GradcheckOptions& o) {
    using namespace gradcheck_detail;
    ComponentReport r{"mlp", o.instances, 0.0};
    SeededRng rng(SeededRng::derive(o.seed, 1));
    for (std::size_t k = 0; k < o.instances; ++k) {
        const MlpParams p = random_mlp(rng);
        const Tensor x = random_tensor({draw_size(rng, 1, 4), p.input_size()}, rng, 2.0);
        const Tensor w = random_tensor({x.rows(), 1}, rng);
        auto [y, cache] = mlp_forward(p, x);
        MlpGrads g = mlp_backward(p, cache, w);
        maybe_corrupt(g.d_params, o.corrupt == r.name);
        r.max_rel_error = std::max(r.max_rel_error, pack_error<MlpParams>(
            p, g.d_params, [&](const MlpParams& q) { return project(mlp_forward(q, x).first, w); }, o.eps));
        r.max_rel_error = std::max(r.max_rel_error, tensor_error(
            x, g.d_x, [&](const Tensor& v) { return project(mlp_forward(p, v).first, w); }, o.eps));
    }
    return r;
}

inline ComponentReport check_lstm(const GradcheckOptions& o) {
    using namespace gradcheck_detail;
    ComponentReport r{"lstm", o.instances, 0.0};
    SeededRng rng(SeededRng::derive(o.seed, 2));
    for (std::size_t k = 0; k < o.instances; ++k) {
        LstmParams p = init_lstm(draw_size(rng, 1, 3), draw_size(rng, 2, 5), rng);
        p.bias = random_tensor(p.bias.shape(), rng, 0.5);
        const std::size_t T = draw_size(rng, 1, 6);
        const Tensor seq = random_tensor({T, p.input_size()}, rng);
        const Tensor h0 = random_tensor({p.hidden()}, rng, 0.5);
        const Tensor c0 = random_tensor({p.hidden()}, rng, 0.5);
        const Tensor w = random_tensor({T, p.hidden()}, rng);
        auto [h, cache] = lstm_forward(p, seq, h0, c0);
        LstmGrads g = lstm_backward(p, cache, w);
        maybe_corrupt(g.d_params, o.corrupt == r.name);
        auto run = [&](const LstmParams& q, const Tensor& s, const Tensor& a, const Tensor& b) {
            return project(lstm_forward(q, s, a, b).first, w);
        };
        r.max_rel_error = std::max(r.max_rel_error, pack_error<LstmParams>(
            p, g.d_params, [&](const LstmParams& q) { return run(q, seq, h0, c0); }, o.eps));
        r.max_rel_error = std::max(r.max_rel_error, tensor_error(seq, g.d_seq, [&](const Tensor& v) { return run(p, v, h0, c0); }, o.eps));
        r.max_rel_error = std::max(r.max_rel_error, tensor_error(h0, g.d_h0, [&](const Tensor& v) { return run(p, seq, v, c0); }, o.eps));
        r.max_rel_error = std::max(r.max_rel_error, tensor_error(c0, g.d_c0, [&](const Tensor& v) { return run(p, seq, h0, v); }, o.eps));
    }
    return r;
}

inline ComponentReport check_bilstm(const GradcheckOptions& o) {
    using namespace gradcheck_detail;
    ComponentReport r{"bilstm", o.instances, 0.0};
    SeededRng rng(SeededRng::derive(o.seed, 3));
    for (std::size_t k = 0; k < o.instances; ++k) {
        BiLstmParams p = init_bilstm(draw_size(rng, 1, 3), draw_size(rng, 2, 5), rng);
        const Tensor seq = random_tensor({draw_size(rng, 1, 6), p.forward.input_size()}, rng);
        const Tensor w = random_tensor({p.forward.hidden()}, rng);
        auto [z, cache] = bilstm_encode(p, seq);
        BiLstmGrads g = bilstm_backward(p, cache, w);
        maybe_corrupt(g.d_params, o.corrupt == r.name);
        r.max_rel_error = std::max(r.max_rel_error, pack_error<BiLstmParams>(
            p, g.d_params, [&](const BiLstmParams& q) { return project(bilstm_encode(q, seq).first, w); }, o.eps));
        r.max_rel_error = std::max(r.max_rel_error, tensor_error(
            seq, g.d_seq, [&](const Tensor& v) { return project(bilstm_encode(p, v).first, w); }, o.eps));
    }
    return r;
}

namespace gradcheck_detail {

/// z -> generator -> FiLM sites -> modulated base, differentiated w.r.t. the
/// generator, the base and z.
template <BaseNetwork P>
double film_instance(const P& base, SeededRng& rng, const GradcheckOptions& o, bool corrupt) {
    const std::size_t hz = draw_size(rng, 2, 4);
    GeneratorParams gen = init_generator(BaseOps<P>::sites(base), hz, rng);
    const Tensor z = random_tensor({hz}, rng);
    const Tensor x = random_tensor({draw_size(rng, 1, 4), BaseOps<P>::input_size(base)}, rng, 2.0);
    const Tensor w = random_tensor({x.rows(), 1}, rng);

    auto loss = [&](const P& b, const GeneratorParams& g, const Tensor& zz) {
        return project(BaseOps<P>::modulated_forward(b, generate_modulation(g, zz), x).first, w);
    };
    const auto sites = generate_modulation(gen, z);
    auto [y, cache] = BaseOps<P>::modulated_forward(base, sites, x);
    auto [d_base, d_sites] = BaseOps<P>::modulated_backward(base, sites, cache, w);
    GeneratorGrads gg = generator_backward(gen, z, d_sites);
    maybe_corrupt(gg.d_params, corrupt);

    double err = pack_error<P>(base, d_base, [&](const P& b) { return loss(b, gen, z); }, o.eps);
    err = std::max(err, pack_error<GeneratorParams>(gen, gg.d_params, [&](const GeneratorParams& g) { return loss(base, g, z); }, o.eps));
    err = std::max(err, tensor_error(z, gg.d_z, [&](const Tensor& v) { return loss(base, gen, v); }, o.eps));
    return err;
}

template <BaseNetwork P>
double joint_instance(const TamrlParams<P>& params, const TaskEpisode& e, const GradcheckOptions& o, bool corrupt) {
    EpisodeGrad<P> g = episode_gradient(params, e);
    maybe_corrupt(g.grad, corrupt);
    return pack_error<TamrlParams<P>>(params, g.grad, [&](const TamrlParams<P>& q) { return episode_loss(q, e); }, o.eps);
}

inline Sample random_sample(SeededRng& rng, std::size_t rows, std::size_t drivers) {
    return Sample{random_tensor({rows, drivers}, rng, 2.0), random_tensor({rows, 1}, rng, 2.0)};
}

}  // namespace gradcheck_detail

/// Alternates the MLP and sequence bases across instances.
inline ComponentReport check_film_pipeline(const GradcheckOptions& o) {
    using namespace gradcheck_detail;
    ComponentReport r{"film-pipeline", o.instances, 0.0};
    SeededRng rng(SeededRng::derive(o.seed, 4));
    const bool corrupt = o.corrupt == r.name;
    for (std::size_t k = 0; k < o.instances; ++k) {
        const double err = k % 2 == 0 ? film_instance(random_mlp(rng), rng, o, corrupt)
                                       : film_instance(random_seq_base(rng), rng, o, corrupt);
        r.max_rel_error = std::max(r.max_rel_error, err);
    }
    return r;
}

/// Query loss of a full episode w.r.t. base, generator and encoder together.
inline ComponentReport check_joint(const GradcheckOptions& o) {
    using namespace gradcheck_detail;
    ComponentReport r{"joint", o.instances, 0.0};
    SeededRng rng(SeededRng::derive(o.seed, 5));
    const bool corrupt = o.corrupt == r.name;
    for (std::size_t k = 0; k < o.instances; ++k) {
        ModelArch arch;
        arch.drivers = draw_size(rng, 1, 2);
        arch.base_hidden = draw_size(rng, 2, 4);
        arch.base_layers = draw_size(rng, 1, 3);
        arch.input_width = draw_size(rng, 2, 3);
        arch.encoder_hidden = draw_size(rng, 2, 3);
        TaskEpisode e;
        e.id = "gradcheck" + std::to_string(k);
        const std::size_t rows = draw_size(rng, 2, 5);
        for (std::size_t i = 0, n = draw_size(rng, 1, 2); i < n; ++i) e.support.push_back(random_sample(rng, rows, arch.drivers));
        for (std::size_t i = 0, n = draw_size(rng, 1, 2); i < n; ++i) e.query.push_back(random_sample(rng, rows, arch.drivers));
        const std::uint64_t seed = rng.next_u64();
        const double err = k % 2 == 0 ? joint_instance(init_model<MlpParams>(arch, seed), e, o, corrupt)
                                       : joint_instance(init_model<SeqBaseParams>(arch, seed), e, o, corrupt);
        r.max_rel_error = std::max(r.max_rel_error, err);
    }
    return r;
}

inline std::vector<ComponentReport> run_gradcheck(const GradcheckOptions& o) {
    return {check_mlp(o), check_lstm(o), check_bilstm(o), check_film_pipeline(o), check_joint(o)};
}

}  // namespace tamrl
