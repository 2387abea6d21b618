#include <gtest/gtest.h>

#include <cmath>

#include "tamrl/experiment/gradcheck.hpp"
#include "tamrl/networks/init.hpp"

using namespace tamrl;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor random_tensor(Shape s, SeededRng& rng) {
    Tensor t(std::move(s));
    for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

MlpParams single_layer(double w, double b) {
    MlpParams p;
    p.layers.push_back(Affine{Tensor::matrix({{w}}), Tensor::vector({b})});
    p.activations.push_back(Activation::identity);
    return p;
}

LstmParams zero_lstm(std::size_t d, std::size_t h) {
    return LstmParams{Tensor({4 * h, d}), Tensor({4 * h, h}), Tensor({4 * h})};
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
    SeededRng rng(1);
    MlpParams p = init_mlp({3, 5, 1}, rng);
    for (auto& l : p.layers) {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    EXPECT_EQ(mlp_forward(p, random_tensor({4, 3}, rng)).first, Tensor({4, 1}));
}

TEST(Mlp, SingleLinearLayer) {
    EXPECT_EQ(mlp_forward(single_layer(2.0, 1.0), Tensor::matrix({{3}})).first, Tensor::matrix({{7}}));
}

TEST(Mlp, TwoLayerMatchesStraightLineOracle) {
    SeededRng rng(2);
    const MlpParams p = init_mlp({2, 3, 1}, rng);
    const Tensor x = random_tensor({4, 2}, rng);
    const Tensor y = mlp_forward(p, x).first;
    const auto& W0 = p.layers[0].weight;
    const auto& b0 = p.layers[0].bias;
    const auto& W1 = p.layers[1].weight;
    const auto& b1 = p.layers[1].bias;
    for (std::size_t r = 0; r < 4; ++r) {
        double out = b1[0];
        for (std::size_t j = 0; j < 3; ++j) {
            double h = b0[j] + W0(j, 0) * x(r, 0) + W0(j, 1) * x(r, 1);
            out += W1(0, j) * std::max(h, 0.0);
        }
        EXPECT_NEAR(y(r, 0), out, 1e-12);
    }
}

TEST(Mlp, ZeroUpstreamGivesZeroGradients) {
    SeededRng rng(3);
    const MlpParams p = init_mlp({2, 4, 1}, rng);
    auto [y, cache] = mlp_forward(p, random_tensor({3, 2}, rng));
    const MlpGrads g = mlp_backward(p, cache, Tensor({3, 1}));
    EXPECT_EQ(flatten_params(g.d_params), Tensor({param_count(p)}));
    EXPECT_EQ(g.d_x, Tensor({3, 2}));
}

TEST(Mlp, LeastSquaresClosedForm) {
    // loss = mean((w x + b - t)^2); dL/dw = 2 mean((w x + b - t) x), dL/db = 2 mean(w x + b - t)
    const MlpParams p = single_layer(0.7, -0.2);
    const Tensor x = Tensor::matrix({{1.0}, {2.0}, {-1.5}});
    const Tensor t = Tensor::matrix({{0.5}, {1.0}, {0.0}});
    auto [y, cache] = mlp_forward(p, x);
    Tensor dy({3, 1});
    double dw = 0.0, db = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = 0.7 * x(i, 0) - 0.2 - t(i, 0);
        dy[i] = 2.0 * r / 3.0;
        dw += 2.0 * r * x(i, 0) / 3.0;
        db += 2.0 * r / 3.0;
    }
    const MlpGrads g = mlp_backward(p, cache, dy);
    EXPECT_NEAR(g.d_params.layers[0].weight[0], dw, 1e-14);
    EXPECT_NEAR(g.d_params.layers[0].bias[0], db, 1e-14);
}

TEST(Mlp, RejectsWrongInputWidth) {
    SeededRng rng(4);
    EXPECT_THROW(mlp_forward(init_mlp({2, 3, 1}, rng), Tensor({1, 3})), ShapeError);
}

TEST(Lstm, ZeroWeightsGiveZeroStates) {
    const auto [h, cache] = lstm_forward(zero_lstm(2, 3), Tensor::matrix({{1, 2}, {3, 4}}));
    EXPECT_EQ(h, Tensor({2, 3}));
}

TEST(Lstm, SingleStepByHand) {
    LstmParams p{Tensor::matrix({{0.5}, {-0.3}, {0.8}, {0.1}}), Tensor::matrix({{0.2}, {0.4}, {-0.6}, {0.7}}),
                 Tensor::vector({0.1, 1.0, -0.2, 0.05})};
    const double x = 1.5, h0 = 0.3, c0 = -0.4;
    const double i = sig(0.5 * x + 0.2 * h0 + 0.1);
    const double f = sig(-0.3 * x + 0.4 * h0 + 1.0);
    const double g = std::tanh(0.8 * x - 0.6 * h0 - 0.2);
    const double o = sig(0.1 * x + 0.7 * h0 + 0.05);
    const double c = f * c0 + i * g;
    const double h = o * std::tanh(c);
    const auto [hs, cache] = lstm_forward(p, Tensor::matrix({{x}}), Tensor::vector({h0}), Tensor::vector({c0}));
    EXPECT_NEAR(hs(0, 0), h, 1e-15);
    EXPECT_NEAR(cache.steps[0].c[0], c, 1e-15);
}

TEST(Lstm, SequenceEqualsChainedSteps) {
    SeededRng rng(5);
    const LstmParams p = init_lstm(2, 4, rng);
    const Tensor seq = random_tensor({3, 2}, rng);
    const Tensor hs = lstm_forward(p, seq).first;
    std::vector<double> h(4, 0.0), c(4, 0.0);
    for (std::size_t t = 0; t < 3; ++t) {
        LstmState s = lstm_step(p, seq.row(t), h, c);
        h = s.h;
        c = s.c;
        for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(hs(t, k), h[k]);
    }
}

TEST(Lstm, ZeroUpstreamGivesZeroGradients) {
    SeededRng rng(6);
    const LstmParams p = init_lstm(2, 3, rng);
    auto [h, cache] = lstm_forward(p, random_tensor({4, 2}, rng));
    const LstmGrads g = lstm_backward(p, cache, Tensor({4, 3}));
    EXPECT_EQ(flatten_params(g.d_params), Tensor({param_count(p)}));
    EXPECT_EQ(g.d_seq, Tensor({4, 2}));
}

TEST(Lstm, TwoStepGradientMatchesFiniteDifferences) {
    SeededRng rng(7);
    const LstmParams p = init_lstm(2, 3, rng);
    const Tensor seq = random_tensor({2, 2}, rng);
    const Tensor w = random_tensor({2, 3}, rng);
    auto [h, cache] = lstm_forward(p, seq);
    const LstmGrads g = lstm_backward(p, cache, w);
    const Tensor num = finite_diff_grad(
        [&](const Tensor& v) { return dot(lstm_forward(unflatten_params(p, v), seq).first, w); }, flatten_params(p), 1e-5);
    EXPECT_LT(relative_error(flatten_params(g.d_params), num), 1e-4);
    const Tensor num_seq = finite_diff_grad([&](const Tensor& v) { return dot(lstm_forward(p, v).first, w); }, seq, 1e-5);
    EXPECT_LT(relative_error(g.d_seq, num_seq), 1e-4);
}

TEST(BiLstm, ZeroWeightsGiveZeroEmbedding) {
    const BiLstmParams p{zero_lstm(2, 3), zero_lstm(2, 3)};
    EXPECT_EQ(bilstm_encode(p, Tensor::matrix({{1, 2}, {3, 4}})).first, Tensor({3}));
}

TEST(BiLstm, ReversalSymmetry) {
    SeededRng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const BiLstmParams p = init_bilstm(3, 4, rng);
        const Tensor seq = random_tensor({5, 3}, rng);
        const BiLstmParams swapped{p.backward, p.forward};
        const Tensor a = bilstm_encode(p, seq).first;
        const Tensor b = bilstm_encode(swapped, reverse_rows(seq)).first;
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-15);
    }
}

TEST(BiLstm, TwoStepScalarByHand) {
    SeededRng rng(9);
    const BiLstmParams p = init_bilstm(1, 1, rng);
    const double x0 = 0.4, x1 = -0.9;
    auto step = [](const LstmParams& q, double x, double h, double c) {
        const double i = sig(q.w_input[0] * x + q.w_recurrent[0] * h + q.bias[0]);
        const double f = sig(q.w_input[1] * x + q.w_recurrent[1] * h + q.bias[1]);
        const double g = std::tanh(q.w_input[2] * x + q.w_recurrent[2] * h + q.bias[2]);
        const double o = sig(q.w_input[3] * x + q.w_recurrent[3] * h + q.bias[3]);
        const double cn = f * c + i * g;
        return std::pair{o * std::tanh(cn), cn};
    };
    auto [hf1, cf1] = step(p.forward, x0, 0.0, 0.0);
    auto [hf2, cf2] = step(p.forward, x1, hf1, cf1);
    auto [hb1, cb1] = step(p.backward, x1, 0.0, 0.0);
    auto [hb2, cb2] = step(p.backward, x0, hb1, cb1);
    (void)cf2;
    (void)cb2;
    EXPECT_NEAR(bilstm_encode(p, Tensor::matrix({{x0}, {x1}})).first[0], hf2 + hb2, 1e-15);
}

TEST(BiLstm, EmptySequenceIsAnError) {
    SeededRng rng(10);
    EXPECT_THROW(bilstm_encode(init_bilstm(2, 2, rng), Tensor{}), DataError);
}

TEST(Init, SameSeedSameParams) {
    SeededRng a(11), b(11), c(12);
    const MlpParams pa = init_mlp({1, 100, 100, 100, 1}, a);
    EXPECT_EQ(pa, init_mlp({1, 100, 100, 100, 1}, b));
    EXPECT_NE(pa, init_mlp({1, 100, 100, 100, 1}, c));
}

TEST(Init, FanInBound) {
    SeededRng rng(13);
    const Tensor w = init_weight(50, 100, rng);
    EXPECT_LE(max_abs(w), 0.1);
    EXPECT_GT(max_abs(w), 0.09);
}

TEST(Init, ZeroBiasesExceptForgetGate) {
    SeededRng rng(14);
    const LstmParams p = init_lstm(3, 4, rng);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(p.bias[k], (k >= 4 && k < 8) ? 1.0 : 0.0);
    const MlpParams m = init_mlp({2, 3, 1}, rng);
    for (const auto& l : m.layers) EXPECT_EQ(max_abs(l.bias), 0.0);
}

TEST(Gradients, EveryNetworkMatchesFiniteDifferences) {
    GradcheckOptions o;
    for (const auto& r : {check_mlp(o), check_lstm(o), check_bilstm(o)}) {
        EXPECT_EQ(r.instances, 20u);
        EXPECT_LT(r.max_rel_error, 1e-4) << r.name;
    }
}

TEST(Gradients, CorruptedBackwardIsDetected) {
    GradcheckOptions o;
    o.instances = 3;
    o.corrupt = "bilstm";
    EXPECT_GT(check_bilstm(o).max_rel_error, 1e-4);
}

TEST(SeqBase, ForwardShapeAndGradient) {
    SeededRng rng(15);
    const SeqBaseParams p = init_seq_base(2, 3, 4, rng);
    const Tensor x = random_tensor({6, 2}, rng);
    auto [y, cache] = seq_base_forward(p, x);
    EXPECT_EQ(y.shape(), (Shape{6, 1}));
    const Tensor w = random_tensor({6, 1}, rng);
    const SeqBaseGrads g = seq_base_backward(p, cache, w);
    const Tensor num = finite_diff_grad(
        [&](const Tensor& v) { return dot(seq_base_forward(unflatten_params(p, v), x).first, w); }, flatten_params(p), 1e-5);
    EXPECT_LT(relative_error(flatten_params(g.d_params), num), 1e-4);
}
