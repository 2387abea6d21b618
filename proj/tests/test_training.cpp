#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tamrl/adaptation/adapt.hpp"
#include "tamrl/numcore/finite_diff.hpp"
#include "tamrl/synthetic/tasks.hpp"
#include "tamrl/training/checkpoint.hpp"
#include "tamrl/training/trainer.hpp"

using namespace tamrl;

namespace {

Tensor random_tensor(Shape s, SeededRng& rng, double scale = 1.0) {
    Tensor t(std::move(s));
    for (auto& v : t.values()) v = rng.uniform(-scale, scale);
    return t;
}

ModelArch tiny_arch() {
    ModelArch a;
    a.base_hidden = 6;
    a.base_layers = 3;
    a.encoder_hidden = 4;
    return a;
}

std::vector<TaskEpisode> synthetic_episodes(std::size_t per_mode, std::uint64_t seed, const std::string& prefix = "task") {
    using namespace synthetic;
    return to_task_episodes(build_mode_set(ModeSet::set1, per_mode, seed, EpisodeConfig{}), prefix);
}

std::vector<Sample> line_samples(std::size_t n, SeededRng& rng) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor x = random_tensor({4, 1}, rng, 2.0);
        out.push_back({x, scaled(x, 2.0)});
    }
    return out;
}

TrainConfig small_config(std::size_t pretrain, std::size_t joint) {
    TrainConfig c;
    c.pretrain_epochs = pretrain;
    c.joint_epochs = joint;
    c.batch_size = 8;
    c.pretrain_batch_size = 8;
    return c;
}

double cosine(const Tensor& a, const Tensor& b) { return dot(a, b) / (norm(a) * norm(b)); }

}  // namespace

TEST(Loss, WorkedExamples) {
    const LossGrad same = mse_loss(Tensor::matrix({{1}, {2}}), Tensor::matrix({{1}, {2}}));
    EXPECT_EQ(same.value, 0.0);
    EXPECT_EQ(same.grad, Tensor({2, 1}));
    const LossGrad lg = mse_loss(Tensor::matrix({{1}, {2}}), Tensor::matrix({{0}, {0}}));
    EXPECT_DOUBLE_EQ(lg.value, 2.5);
    EXPECT_EQ(lg.grad, Tensor::matrix({{1}, {2}}));
    EXPECT_THROW(mse_loss(Tensor({2, 1}), Tensor({1, 2})), ShapeError);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    SeededRng rng(1);
    const Tensor pred = random_tensor({5, 1}, rng), target = random_tensor({5, 1}, rng);
    const Tensor num = finite_diff_grad([&](const Tensor& p) { return mse_loss(p, target).value; }, pred, 1e-5);
    EXPECT_LT(relative_error(mse_loss(pred, target).grad, num), 1e-8);
}

TEST(Loss, NonFiniteLossAborts) {
    EXPECT_THROW(require_finite_loss(NAN, "here"), NumericError);
    EXPECT_NO_THROW(require_finite_loss(1.0, "here"));
}

TEST(Pretrain, ZeroEpochsKeepsInit) {
    SeededRng rng(2);
    const MlpParams base = init_mlp({1, 8, 1}, rng);
    const auto samples = line_samples(10, rng);
    const auto r = pretrain(base, samples, small_config(0, 0), 3);
    EXPECT_EQ(r.base, base);
    EXPECT_TRUE(r.epoch_loss.empty());
}

TEST(Pretrain, FitsStraightLine) {
    SeededRng rng(4);
    const MlpParams base = init_mlp({1, 16, 1}, rng);
    const auto samples = line_samples(64, rng);
    TrainConfig cfg = small_config(40, 0);
    cfg.lr = 1e-2;
    const auto r = pretrain(base, samples, cfg, 5);
    EXPECT_LT(base_set_loss(r.base, samples), 0.1 * base_set_loss(base, samples));
    EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(Pretrain, SameSeedBitIdentical) {
    SeededRng rng(6);
    const MlpParams base = init_mlp({1, 8, 1}, rng);
    const auto samples = line_samples(30, rng);
    const auto a = pretrain(base, samples, small_config(3, 0), 7);
    const auto b = pretrain(base, samples, small_config(3, 0), 7);
    const auto c = pretrain(base, samples, small_config(3, 0), 8);
    EXPECT_EQ(a.base, b.base);
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
    EXPECT_NE(a.base, c.base);
}

TEST(Pretrain, EmptyPoolRejected) {
    SeededRng rng(9);
    EXPECT_THROW(pretrain(init_mlp({1, 2, 1}, rng), std::span<const Sample>{}, small_config(1, 0), 1), DataError);
}

TEST(Joint, ZeroLearningRateOnlyAdvancesCounters) {
    ModelState<MlpParams> s;
    s.seed = 10;
    s.params = init_model<MlpParams>(tiny_arch(), 10);
    const auto eps = synthetic_episodes(1, 11);
    const TaskEpisode* one = &eps[0];
    auto [next, loss] = joint_step(s, std::span<const TaskEpisode* const>(&one, 1), 0.0);
    EXPECT_EQ(next.params, s.params);
    EXPECT_EQ(next.steps, 1u);
    EXPECT_EQ(next.optimizer.front().step, 1);
    EXPECT_DOUBLE_EQ(loss, episode_loss(s.params, eps[0]));
}

TEST(Joint, TinyObjectiveGradientMatchesFiniteDifferences) {
    ModelArch a;
    a.base_hidden = 2;
    a.base_layers = 2;
    a.encoder_hidden = 2;
    const auto params = init_model<MlpParams>(a, 12);
    const TaskEpisode e = synthetic_episodes(1, 13)[1];
    const auto g = episode_gradient(params, e);
    EXPECT_DOUBLE_EQ(g.loss, episode_loss(params, e));
    const Tensor num = finite_diff_grad(
        [&](const Tensor& v) { return episode_loss(unflatten_params(params, v), e); }, flatten_params(params), 1e-5);
    EXPECT_LT(relative_error(flatten_params(g.grad), num), 1e-4);
}

TEST(Joint, EncoderSeesOnlySupport) {
    const auto params = init_model<MlpParams>(tiny_arch(), 14);
    TaskEpisode e = synthetic_episodes(1, 15)[0];
    const auto before = infer_modulated(params, e.support);
    SeededRng rng(16);
    e.query[0].x = random_tensor({5, 1}, rng);
    e.query[0].y = random_tensor({5, 1}, rng, 100.0);
    EXPECT_EQ(infer_modulated(params, e.support), before);
    // The query loss still responds to the targets.
    const auto g = episode_gradient(params, e);
    EXPECT_GT(g.loss, 100.0);
}

TEST(Joint, BatchGradientIsMeanOfEpisodes) {
    const auto params = init_model<MlpParams>(tiny_arch(), 17);
    const auto eps = synthetic_episodes(1, 18);
    std::vector<const TaskEpisode*> batch{&eps[0], &eps[1], &eps[2]};
    const auto g = batch_gradient(params, std::span<const TaskEpisode* const>(batch));
    const Tensor mean = scaled(add(add(flatten_params(episode_gradient(params, eps[0]).grad),
                                       flatten_params(episode_gradient(params, eps[1]).grad)),
                                   flatten_params(episode_gradient(params, eps[2]).grad)),
                               1.0 / 3.0);
    EXPECT_LT(relative_error(flatten_params(g.grad), mean), 1e-14);
}

TEST(Joint, LossDecreasesOnSetOne) {
    ModelState<MlpParams> s;
    s.seed = 19;
    s.params = init_model<MlpParams>(tiny_arch(), 19);
    TrainConfig cfg = small_config(0, 6);
    cfg.lr = 3e-3;
    const auto r = joint_train(s, fixed_episodes(synthetic_episodes(40, 20)), cfg);
    ASSERT_EQ(r.epoch_loss.size(), 6u);
    EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
    EXPECT_EQ(r.state.joint_epochs, 6u);
    EXPECT_EQ(r.state.steps, 6u * 15u);
}

TEST(Joint, TrainedEncoderSeparatesFamilies) {
    ModelState<MlpParams> s;
    s.seed = 21;
    s.params = init_model<MlpParams>(tiny_arch(), 21);
    const auto eps = synthetic_episodes(30, 22);
    const auto r = joint_train(s, fixed_episodes(eps), small_config(0, 3));
    const Tensor z_sine = encode_task(r.state.params.encoder, eps[0].support);
    const Tensor z_line = encode_task(r.state.params.encoder, eps[1].support);
    EXPECT_EQ(eps[0].label, "sine");
    EXPECT_EQ(eps[1].label, "linear");
    EXPECT_LT(cosine(z_sine, z_line), 1.0);
}

TEST(Joint, ResumeFromCheckpointIsBitIdentical) {
    ModelState<MlpParams> s;
    s.seed = 23;
    s.params = init_model<MlpParams>(tiny_arch(), 23);
    const auto source = fixed_episodes(synthetic_episodes(10, 24));
    const auto straight = joint_train(s, source, small_config(0, 4));

    const auto half = joint_train(s, source, small_config(0, 2));
    std::stringstream buf;
    write_checkpoint(buf, half.state, 0xabcULL);
    const auto restored = read_checkpoint(buf, s, 0xabcULL);
    EXPECT_EQ(restored, half.state);
    const auto resumed = joint_train(restored, source, small_config(0, 4));
    EXPECT_EQ(resumed.state, straight.state);
    EXPECT_EQ(resumed.epoch_loss, std::vector<double>(straight.epoch_loss.begin() + 2, straight.epoch_loss.end()));
}

TEST(Checkpoint, RejectsMismatchAndDamage) {
    ModelState<MlpParams> s;
    s.params = init_model<MlpParams>(tiny_arch(), 25);
    std::stringstream buf;
    write_checkpoint(buf, s, 1);
    const std::string bytes = buf.str();

    std::istringstream wrong_hash(bytes);
    EXPECT_THROW(read_checkpoint(wrong_hash, s, 2), ConfigError);

    std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(read_checkpoint(truncated, s, 1), DataError);

    std::istringstream garbage("not a checkpoint at all");
    EXPECT_THROW(read_checkpoint(garbage, s, 1), DataError);

    ModelArch other = tiny_arch();
    other.base_hidden = 7;
    ModelState<MlpParams> like;
    like.params = init_model<MlpParams>(other, 25);
    std::istringstream shape(bytes);
    EXPECT_THROW(read_checkpoint(shape, like, 1), DataError);
}

TEST(Checkpoint, SequenceBaseRoundTrip) {
    ModelArch a = tiny_arch();
    a.drivers = 3;
    a.input_width = 5;
    ModelState<SeqBaseParams> s;
    s.seed = 26;
    s.params = init_model<SeqBaseParams>(a, 26);
    s.optimizer = make_optimizer(s.params, 1e-3);
    std::stringstream buf;
    write_checkpoint(buf, s, 7);
    EXPECT_EQ(read_checkpoint(buf, s, 7), s);
}

TEST(Ensemble, SeedsAndMembers) {
    EXPECT_EQ(ensemble_seeds(5, 1), (std::vector<std::uint64_t>{5}));
    EXPECT_EQ(ensemble_seeds(5, 3), (std::vector<std::uint64_t>{5, 6, 7}));
    EXPECT_THROW(ensemble_seeds(5, 0), ConfigError);

    const auto eps = synthetic_episodes(4, 27);
    const auto pooled = pool_samples(eps);
    EXPECT_EQ(pooled.size(), 2 * eps.size());
    const auto cfg = small_config(1, 1);
    const auto runs = train_ensemble<MlpParams>(tiny_arch(), 30, 2, true, pooled, fixed_episodes(eps), cfg);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_NE(runs[0].state.params, runs[1].state.params);
    const auto again = train_member<MlpParams>(tiny_arch(), 31, true, pooled, fixed_episodes(eps), cfg);
    EXPECT_EQ(again.state, runs[1].state);
    EXPECT_EQ(again.state.pretrain_epochs, 1u);
}

TEST(Parallel, OrderedReduceIsOrderStable) {
    std::vector<std::size_t> seen;
    ordered_reduce(50, [](std::size_t i) { return i * i; }, [&](std::size_t&& v) { seen.push_back(v); });
    ASSERT_EQ(seen.size(), 50u);
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(seen[i], i * i);
}
