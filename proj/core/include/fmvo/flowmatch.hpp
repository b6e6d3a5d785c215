#pragma once

// Conditional flow matching on the straight (optimal transport) path
//   x_tau = (1 - tau) x0 + tau x1,  target velocity x1 - x0,
// with x0 from the base distribution and the loss
//   mean_b || u(x_tau, tau, c) - (x1 - x0) ||^2.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fmvo/kv_config.hpp"
#include "fmvo/random.hpp"
#include "fmvo/se3.hpp"
#include "fmvo/vfnet.hpp"

namespace fmvo {

struct TrainingPair {
  MotionState target;
  ConditionVector cond;
};

struct PathSample {
  double tau = 0.0;
  MotionState x0;
  MotionState x_tau;
  Vec6 target_velocity = Vec6::Zero();
  ConditionVector cond;
};

// Deterministic path point for a given start and time.
PathSample make_path_sample(const TrainingPair& pair, const MotionState& x0, double tau);

// tau ~ U[0,1] then x0 ~ base distribution, in that order.
PathSample sample_path(const TrainingPair& pair, Rng& rng);

// Per-block weights on the squared error; unit weights reproduce the plain loss.
struct LossWeights {
  double rotation = 1.0;
  double translation = 1.0;
};

struct LossResult {
  double loss = 0.0;
  Gradients grads;
};

// Throws InvalidArgument on an empty batch.
LossResult cfm_loss(const VectorFieldNet& net, std::span<const PathSample> batch, const LossWeights& weights = {});

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  static AdamState zeros_like(const VectorFieldNet& net);
};

// One bias-corrected Adam update in place. Throws NumericalError if any
// parameter becomes non-finite.
void adam_step(VectorFieldNet& net, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg = {});

struct TrainConfig {
  int batch_size = 64;
  int epochs = 100;
  // 0: one shuffled pass over the dataset per epoch; otherwise this many
  // minibatches drawn with replacement.
  int steps_per_epoch = 20;
  double lr = 1e-3;
  double lr_decay_factor = 0.5;
  int lr_decay_epoch = 50;
  AdamConfig adam;
  LossWeights weights;
  std::uint64_t seed = 0;

  void validate() const;
  // Reads recognised keys, leaving others at their current values.
  void apply(const KeyValueConfig& kv);
};

NetConfig net_config_from(const KeyValueConfig& kv, NetConfig base = {});

struct LossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  VectorFieldNet net;
  std::vector<LossRecord> history;
};

// initial: loss at step 0. final: mean of the last max(1, n/50) losses.
struct LossSummary {
  double initial = 0.0;
  double final = 0.0;
  double ratio = 0.0;
};
LossSummary summarize_history(std::span<const LossRecord> history);

// Learning rate in effect during `epoch` (0-based): lr * factor^(epoch / decay_epoch).
double scheduled_lr(const TrainConfig& cfg, int epoch);

// Trains from a fresh initialization seeded by cfg.seed.
TrainResult train(std::span<const TrainingPair> dataset, const TrainConfig& cfg, const NetConfig& net_cfg);

// Continues from given parameters with a fresh optimizer state.
TrainResult train_from(VectorFieldNet net, std::span<const TrainingPair> dataset, const TrainConfig& cfg);

}  // namespace fmvo
