#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fmvo/errors.hpp"
#include "fmvo/flowmatch.hpp"
#include "fmvo/sampler.hpp"

using namespace fmvo;

namespace {

NetConfig tiny_config() {
  NetConfig c;
  c.cond_dim = 4;
  c.time_embed_dim = 4;
  c.state_embed_width = 8;
  c.cond_embed_width = 8;
  c.cond_embed_layers = 2;
  c.trunk_width = 8;
  c.trunk_layers = 2;
  c.head_width = 8;
  c.head_layers = 2;
  return c;
}

ConditionVector cond_of(std::initializer_list<double> v) {
  ConditionVector c;
  c.values.resize(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) c.values(i++) = x;
  return c;
}

TrainingPair dirac_pair() {
  return {MotionState{Vec3(0.02, -0.03, 0.1), Vec3(0.4, 0.05, -0.03)}, cond_of({0.3, -0.2, 0.5, 0.1})};
}

std::vector<PathSample> random_batch(const std::vector<TrainingPair>& pairs, int n, Rng& rng) {
  std::vector<PathSample> b;
  for (int i = 0; i < n; ++i) b.push_back(sample_path(pairs[static_cast<std::size_t>(i) % pairs.size()], rng));
  return b;
}

}  // namespace

TEST(PathSample, Endpoints) {
  Rng rng(1);
  const TrainingPair p = dirac_pair();
  for (int i = 0; i < 100; ++i) {
    const MotionState x0 = sample_initial(rng);
    EXPECT_LT((make_path_sample(p, x0, 0.0).x_tau.vector() - x0.vector()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((make_path_sample(p, x0, 1.0).x_tau.vector() - p.target.vector()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PathSample, VelocityIndependentOfTau) {
  Rng rng(2);
  const TrainingPair p = dirac_pair();
  const MotionState x0 = sample_initial(rng);
  const Vec6 v = make_path_sample(p, x0, 0.0).target_velocity;
  EXPECT_EQ(v, p.target.vector() - x0.vector());
  for (double t : {0.1, 0.5, 0.77, 1.0}) EXPECT_EQ(make_path_sample(p, x0, t).target_velocity, v);
}

TEST(PathSample, PointLiesOnSegment) {
  Rng rng(3);
  const TrainingPair p = dirac_pair();
  for (int i = 0; i < 100; ++i) {
    const PathSample s = sample_path(p, rng);
    EXPECT_GE(s.tau, 0.0);
    EXPECT_LT(s.tau, 1.0);
    const Vec6 expect = s.x0.vector() + s.tau * s.target_velocity;
    EXPECT_LT((s.x_tau.vector() - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PathSample, ExpectedVelocityTranslationBlock) {
  Rng rng(4);
  const TrainingPair p = dirac_pair();
  Vec6 sum = Vec6::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_path(p, rng).target_velocity;
  const Vec6 mean = sum / n;
  // E[x0] = 0 in both blocks (the rotation block by symmetry of the uniform law).
  EXPECT_LT((mean.tail<3>() - p.target.trans).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LT((mean.head<3>() - p.target.rho).cwiseAbs().maxCoeff(), 0.02);
}

TEST(CfmLoss, ZeroNetGivesMeanSquaredVelocity) {
  Rng rng(5);
  const VectorFieldNet net = init_params(rng, tiny_config());
  const std::vector<TrainingPair> pairs{dirac_pair()};
  const auto batch = random_batch(pairs, 32, rng);
  double expect = 0.0;
  for (const PathSample& s : batch) expect += s.target_velocity.squaredNorm();
  expect /= 32.0;
  EXPECT_NEAR(cfm_loss(net, batch).loss, expect, 1e-12);
}

TEST(CfmLoss, ExactNetGivesZero) {
  Rng rng(6);
  VectorFieldNet net = init_params(rng, tiny_config());
  const TrainingPair p = dirac_pair();
  const MotionState x0 = sample_initial(rng);
  const Vec6 v = p.target.vector() - x0.vector();
  // A constant field: zero output weights and the target velocity as bias.
  net.head_rot.back().bias = v.head<3>();
  net.head_trans.back().bias = v.tail<3>();
  std::vector<PathSample> batch;
  for (double t : {0.0, 0.2, 0.5, 0.9}) batch.push_back(make_path_sample(p, x0, t));
  const LossResult r = cfm_loss(net, batch);
  EXPECT_NEAR(r.loss, 0.0, 1e-24);
  EXPECT_LT(r.grads.flatten().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CfmLoss, NonNegativeAndRejectsEmpty) {
  Rng rng(7);
  VectorFieldNet net = init_params(rng, tiny_config());
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Eigen::VectorXd p(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(rng);
  net.set_flat_parameters(p);
  const std::vector<TrainingPair> pairs{dirac_pair()};
  for (int i = 0; i < 20; ++i) EXPECT_GE(cfm_loss(net, random_batch(pairs, 8, rng)).loss, 0.0);
  EXPECT_THROW(cfm_loss(net, std::vector<PathSample>{}), InvalidArgument);
}

TEST(CfmLoss, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  VectorFieldNet net = init_params(rng, tiny_config());
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  Eigen::VectorXd theta(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = u(rng);
  net.set_flat_parameters(theta);
  const std::vector<TrainingPair> pairs{dirac_pair(), {MotionState{Vec3(-0.1, 0, 0.2), Vec3(0, 1, 0)},
                                                       cond_of({1, 0, -1, 0.5})}};
  const auto batch = random_batch(pairs, 6, rng);
  const LossWeights w{0.7, 1.3};
  const Eigen::VectorXd g = cfm_loss(net, batch, w).grads.flatten();
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double keep = theta(i);
    theta(i) = keep + h;
    net.set_flat_parameters(theta);
    const double lp = cfm_loss(net, batch, w).loss;
    theta(i) = keep - h;
    net.set_flat_parameters(theta);
    const double lm = cfm_loss(net, batch, w).loss;
    theta(i) = keep;
    const double fd = (lp - lm) / (2 * h);
    worst = std::max(worst, std::abs(g(i) - fd) / std::max({std::abs(g(i)), std::abs(fd), 1e-6}));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(CfmLoss, BlockWeights) {
  Rng rng(9);
  const VectorFieldNet net = init_params(rng, tiny_config());
  const std::vector<TrainingPair> pairs{dirac_pair()};
  const auto batch = random_batch(pairs, 16, rng);
  double rot = 0.0, trans = 0.0;
  for (const PathSample& s : batch) {
    rot += s.target_velocity.head<3>().squaredNorm();
    trans += s.target_velocity.tail<3>().squaredNorm();
  }
  EXPECT_NEAR(cfm_loss(net, batch, {2.0, 0.5}).loss, (2.0 * rot + 0.5 * trans) / 16.0, 1e-12);
}

TEST(Adam, FirstStepClosedForm) {
  Rng rng(10);
  VectorFieldNet net = init_params(rng, tiny_config());
  const Eigen::VectorXd before = net.flat_parameters();
  Gradients g = Gradients::zeros_like(net);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& w : g.weight) w = w.unaryExpr([&](double) { return n(rng); });
  for (auto& b : g.bias) b = b.unaryExpr([&](double) { return n(rng); });
  AdamState st = AdamState::zeros_like(net);
  const AdamConfig cfg;
  adam_step(net, g, st, 0.01, cfg);
  const Eigen::VectorXd gf = g.flatten();
  const Eigen::VectorXd expect = before.array() - 0.01 * gf.array() / (gf.array().abs() + cfg.epsilon);
  EXPECT_LT((net.flat_parameters() - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ConstantGradientMovesAtRateLr) {
  Rng rng(11);
  VectorFieldNet net = init_params(rng, tiny_config());
  Gradients g = Gradients::zeros_like(net);
  for (auto& w : g.weight) w.setConstant(0.3);
  for (auto& b : g.bias) b.setConstant(-2.0);
  AdamState st = AdamState::zeros_like(net);
  Eigen::VectorXd prev = net.flat_parameters();
  Eigen::VectorXd delta;
  for (int i = 0; i < 200; ++i) {
    adam_step(net, g, st, 1e-3, {});
    delta = net.flat_parameters() - prev;
    prev = net.flat_parameters();
  }
  EXPECT_LT((delta.cwiseAbs().array() - 1e-3).abs().maxCoeff(), 1e-8);
  const Eigen::VectorXd gf = g.flatten();
  for (Eigen::Index i = 0; i < gf.size(); ++i) EXPECT_LT(delta(i) * gf(i), 0.0);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(12);
  VectorFieldNet net = init_params(rng, tiny_config());
  const Eigen::VectorXd before = net.flat_parameters();
  AdamState st = AdamState::zeros_like(net);
  for (int i = 0; i < 10; ++i) adam_step(net, Gradients::zeros_like(net), st, 1e-2, {});
  EXPECT_EQ(net.flat_parameters(), before);
}

TEST(Adam, ShapeMismatchRejected) {
  Rng rng(13);
  VectorFieldNet net = init_params(rng, tiny_config());
  AdamState st = AdamState::zeros_like(net);
  st.m.resize(3);
  EXPECT_THROW(adam_step(net, Gradients::zeros_like(net), st, 1e-3, {}), ConfigError);
}

TEST(GradientStep, LinearInParametersLossDecreases) {
  // With everything but the two output layers frozen the model is linear in
  // the trainable parameters and the loss is a convex quadratic in them.
  Rng rng(14);
  VectorFieldNet net = init_params(rng, tiny_config());
  const std::vector<TrainingPair> pairs{dirac_pair()};
  const auto batch = random_batch(pairs, 32, rng);
  const std::size_t rot = net.state_embed.size() + net.cond_embed.size() + net.trunk.size() + net.head_rot.size() - 1;
  const std::size_t trans = rot + net.head_trans.size();
  double loss = cfm_loss(net, batch).loss;
  for (int it = 0; it < 20; ++it) {
    const LossResult r = cfm_loss(net, batch);
    EXPECT_NEAR(r.loss, loss, 1e-12);
    net.head_rot.back().weight -= 0.05 * r.grads.weight[rot];
    net.head_rot.back().bias -= 0.05 * r.grads.bias[rot];
    net.head_trans.back().weight -= 0.05 * r.grads.weight[trans];
    net.head_trans.back().bias -= 0.05 * r.grads.bias[trans];
    const double next = cfm_loss(net, batch).loss;
    EXPECT_LT(next, loss);
    loss = next;
  }
}

TEST(Schedule, StepDecay) {
  TrainConfig c;
  c.lr = 1e-3;
  c.lr_decay_factor = 0.5;
  c.lr_decay_epoch = 50;
  EXPECT_EQ(scheduled_lr(c, 0), 1e-3);
  EXPECT_EQ(scheduled_lr(c, 49), 1e-3);
  EXPECT_EQ(scheduled_lr(c, 50), 5e-4);
  EXPECT_EQ(scheduled_lr(c, 99), 5e-4);
  EXPECT_EQ(scheduled_lr(c, 100), 2.5e-4);
}

TEST(TrainConfig, ValidationAndKeys) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.epochs * c.steps_per_epoch, 2000);
  const KeyValueConfig kv = KeyValueConfig::parse("batch_size=8\nepochs=3\nlr=0.01\nrot_weight=2\nseed=9\n");
  c.apply(kv);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.weights.rotation, 2.0);
  EXPECT_EQ(c.seed, 9u);
  c.lr = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.lr_decay_factor = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(TrainConfig{}.apply(KeyValueConfig::parse("epochs=many\n")), ConfigError);
}

TEST(Train, RejectsEmptyDatasetAndDimensionMismatch) {
  TrainConfig c;
  EXPECT_THROW(train(std::vector<TrainingPair>{}, c, tiny_config()), InvalidArgument);
  const std::vector<TrainingPair> bad{{MotionState{}, cond_of({1, 2})}};
  EXPECT_THROW(train(bad, c, tiny_config()), ConfigError);
}

TEST(Train, NanLossAbortsWithLocation) {
  TrainingPair p = dirac_pair();
  p.target.trans.x() = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c;
  c.epochs = 2;
  c.steps_per_epoch = 3;
  try {
    train(std::vector<TrainingPair>{p}, c, tiny_config());
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 0"), std::string::npos) << msg;
  }
}

TEST(Train, BitIdenticalHistories) {
  const std::vector<TrainingPair> data{dirac_pair()};
  TrainConfig c;
  c.epochs = 4;
  c.steps_per_epoch = 10;
  c.seed = 21;
  const TrainResult a = train(data, c, tiny_config());
  const TrainResult b = train(data, c, tiny_config());
  ASSERT_EQ(a.history.size(), 40u);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  EXPECT_EQ(a.net.flat_parameters(), b.net.flat_parameters());
  c.seed = 22;
  EXPECT_NE(train(data, c, tiny_config()).history.back().loss, a.history.back().loss);
}

TEST(Train, FullPassEpochs) {
  std::vector<TrainingPair> data(10, dirac_pair());
  TrainConfig c;
  c.epochs = 3;
  c.steps_per_epoch = 0;
  c.batch_size = 4;
  const TrainResult r = train(data, c, tiny_config());
  EXPECT_EQ(r.history.size(), 9u);  // ceil(10 / 4) per epoch
  EXPECT_EQ(r.history[3].epoch, 1);
}

TEST(Train, ResumeIsDeterministic) {
  const std::vector<TrainingPair> data{dirac_pair()};
  TrainConfig c;
  c.epochs = 2;
  c.steps_per_epoch = 10;
  const TrainResult first = train(data, c, tiny_config());
  const TrainResult a = train_from(first.net, data, c);
  const TrainResult b = train_from(first.net, data, c);
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
}

TEST(SummarizeHistory, InitialIsFirstStep) {
  std::vector<LossRecord> h;
  for (int i = 0; i < 100; ++i) h.push_back({i, 0, 1e-3, 100.0 - i});
  const LossSummary s = summarize_history(h);
  EXPECT_EQ(s.initial, 100.0);
  EXPECT_EQ(s.final, 1.5);  // mean of the last two
  EXPECT_EQ(s.ratio, 0.015);
  EXPECT_THROW(summarize_history(std::vector<LossRecord>{}), InvalidArgument);
}

TEST(Train, DiracLossSmoothedDecreasing) {
  const std::vector<TrainingPair> data{dirac_pair()};
  TrainConfig c;
  c.seed = 3;
  const TrainResult r = train(data, c, tiny_config());
  const std::size_t blocks = 4, len = r.history.size() / blocks;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < blocks; ++b) {
    double m = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) m += r.history[i].loss;
    m /= static_cast<double>(len);
    EXPECT_LT(m, prev) << "block " << b;
    prev = m;
  }
}

TEST(Train, DiracFinalLossBelowOneThousandthOfInitial) {
  const std::vector<TrainingPair> data{dirac_pair()};
  TrainConfig c;
  c.seed = 7;
  const TrainResult r = train(data, c, NetConfig{.cond_dim = 4});
  const LossSummary s = summarize_history(r.history);
  RecordProperty("loss_ratio", std::to_string(s.ratio));
  EXPECT_LT(s.ratio, 1e-3) << "initial " << s.initial << " final " << s.final;
}

TEST(Train, TwoConditionsTwoTargets) {
  const std::vector<TrainingPair> data{
      {MotionState{Vec3(0.1, 0.2, 0.0), Vec3(0.5, 0.2, 0.0)}, cond_of({1, 0, 0, 0})},
      {MotionState{Vec3(-0.2, 0.0, 0.1), Vec3(-0.3, 0.0, 0.4)}, cond_of({0, 1, 0, 0})}};
  TrainConfig c;
  c.epochs = 100;
  c.steps_per_epoch = 100;
  c.lr_decay_epoch = 25;
  c.seed = 5;
  const TrainResult r = train(data, c, NetConfig{.cond_dim = 4});
  for (std::size_t i = 0; i < data.size(); ++i) {
    Rng rng(100 + i);
    const PoseSampleSet set = estimate_pose(r.net, data[i].cond, {}, 10, rng);
    EXPECT_LT((set.mean_state.vector() - data[i].target.vector()).cwiseAbs().maxCoeff(), 0.05) << i;
    EXPECT_LT(set.std_state.maxCoeff(), 0.05) << i;
  }
}
