#include "fmvo/flowmatch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fmvo/errors.hpp"

namespace fmvo {

PathSample make_path_sample(const TrainingPair& pair, const MotionState& x0, double tau) {
  PathSample s;
  s.tau = tau;
  s.x0 = x0;
  const Vec6 a = x0.vector();
  const Vec6 b = pair.target.vector();
  s.x_tau = MotionState::from_vector((1.0 - tau) * a + tau * b);
  s.target_velocity = b - a;
  s.cond = pair.cond;
  return s;
}

PathSample sample_path(const TrainingPair& pair, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double tau = uni(rng);
  const MotionState x0 = sample_initial(rng);
  return make_path_sample(pair, x0, tau);
}

LossResult cfm_loss(const VectorFieldNet& net, std::span<const PathSample> batch, const LossWeights& weights) {
  if (batch.empty()) throw InvalidArgument("cfm_loss: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd states(6, n);
  Eigen::VectorXd taus(n);
  Eigen::MatrixXd conds(net.config.cond_dim, n);
  Eigen::MatrixXd targets(6, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const PathSample& s = batch[static_cast<std::size_t>(b)];
    if (s.cond.dim() != net.config.cond_dim) throw ConfigError("condition dimension does not match network");
    states.col(b) = s.x_tau.vector();
    taus(b) = s.tau;
    conds.col(b) = s.cond.values;
    targets.col(b) = s.target_velocity;
  }

  ForwardCache cache;
  const Eigen::MatrixXd pred = forward_batch(net, states, taus, conds, &cache);
  Eigen::MatrixXd residual = pred - targets;
  Vec6 w;
  w << Eigen::Vector3d::Constant(weights.rotation), Eigen::Vector3d::Constant(weights.translation);

  LossResult out;
  out.loss = (w.asDiagonal() * residual.array().square().matrix()).sum() / static_cast<double>(n);
  const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(n)) * (w.asDiagonal() * residual);
  out.grads = backward_batch(net, cache, upstream);
  return out;
}

AdamState AdamState::zeros_like(const VectorFieldNet& net) {
  const auto n = static_cast<Eigen::Index>(net.parameter_count());
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
}

void adam_step(VectorFieldNet& net, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg) {
  const Eigen::VectorXd g = grads.flatten();
  const auto n = static_cast<Eigen::Index>(net.parameter_count());
  if (g.size() != n || state.m.size() != n || state.v.size() != n) throw ConfigError("adam_step: shape mismatch");

  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd m_hat = state.m.array() / c1;
  const Eigen::ArrayXd v_hat = state.v.array() / c2;
  Eigen::VectorXd theta = net.flat_parameters();
  theta.array() -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
  if (!theta.allFinite()) {
    throw NumericalError("adam_step: non-finite parameter after step " + std::to_string(state.step));
  }
  net.set_flat_parameters(theta);
}

void TrainConfig::validate() const {
  if (batch_size <= 0 || epochs <= 0 || steps_per_epoch < 0 || lr_decay_epoch <= 0) {
    throw ConfigError("training counts must be positive");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ConfigError("lr_decay_factor must lie in (0, 1]");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
    throw ConfigError("invalid Adam hyper-parameters");
  }
  if (!(weights.rotation >= 0.0 && weights.translation >= 0.0)) throw ConfigError("loss weights must be >= 0");
}

void TrainConfig::apply(const KeyValueConfig& kv) {
  if (auto v = kv.get_int("batch_size")) batch_size = static_cast<int>(*v);
  if (auto v = kv.get_int("epochs")) epochs = static_cast<int>(*v);
  if (auto v = kv.get_int("steps_per_epoch")) steps_per_epoch = static_cast<int>(*v);
  if (auto v = kv.get_double("lr")) lr = *v;
  if (auto v = kv.get_double("lr_decay_factor")) lr_decay_factor = *v;
  if (auto v = kv.get_int("lr_decay_epoch")) lr_decay_epoch = static_cast<int>(*v);
  if (auto v = kv.get_double("adam_beta1")) adam.beta1 = *v;
  if (auto v = kv.get_double("adam_beta2")) adam.beta2 = *v;
  if (auto v = kv.get_double("adam_epsilon")) adam.epsilon = *v;
  if (auto v = kv.get_double("rot_weight")) weights.rotation = *v;
  if (auto v = kv.get_double("trans_weight")) weights.translation = *v;
  if (auto v = kv.get_uint("seed")) seed = *v;
}

NetConfig net_config_from(const KeyValueConfig& kv, NetConfig c) {
  const auto geti = [&](const char* key, int& field) {
    if (auto v = kv.get_int(key)) field = static_cast<int>(*v);
  };
  geti("cond_dim", c.cond_dim);
  geti("time_embed_dim", c.time_embed_dim);
  geti("state_embed_width", c.state_embed_width);
  geti("cond_embed_width", c.cond_embed_width);
  geti("cond_embed_layers", c.cond_embed_layers);
  geti("trunk_width", c.trunk_width);
  geti("trunk_layers", c.trunk_layers);
  geti("head_width", c.head_width);
  geti("head_layers", c.head_layers);
  return c;
}

LossSummary summarize_history(std::span<const LossRecord> history) {
  if (history.empty()) throw InvalidArgument("summarize_history: empty history");
  const std::size_t w = std::max<std::size_t>(1, history.size() / 50);
  LossSummary s;
  s.initial = history.front().loss;
  for (std::size_t i = 0; i < w; ++i) s.final += history[history.size() - 1 - i].loss;
  s.final /= static_cast<double>(w);
  s.ratio = s.initial > 0.0 ? s.final / s.initial : 0.0;
  return s;
}

double scheduled_lr(const TrainConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_epoch);
}

TrainResult train_from(VectorFieldNet net, std::span<const TrainingPair> dataset, const TrainConfig& cfg) {
  cfg.validate();
  net.check_shapes();
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  for (const TrainingPair& p : dataset) {
    if (p.cond.dim() != net.config.cond_dim) throw ConfigError("train: condition dimension does not match network");
  }

  Rng rng(derive_seed(cfg.seed, SeedStream::kTrain));
  AdamState adam = AdamState::zeros_like(net);
  TrainResult result;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<PathSample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  std::int64_t step = 0;

  const auto run_batch = [&](int epoch, int batch_index, double lr) {
    const LossResult lr_out = cfm_loss(net, batch, cfg.weights);
    if (!std::isfinite(lr_out.loss)) {
      throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + " (step " + std::to_string(step) + ")");
    }
    result.history.push_back({step, epoch, lr, lr_out.loss});
    adam_step(net, lr_out.grads, adam, lr, cfg.adam);
    ++step;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    if (cfg.steps_per_epoch == 0) {
      std::shuffle(order.begin(), order.end(), rng);
      int batch_index = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        batch.clear();
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        for (std::size_t i = start; i < end; ++i) batch.push_back(sample_path(dataset[order[i]], rng));
        run_batch(epoch, batch_index++, lr);
      }
    } else {
      for (int b = 0; b < cfg.steps_per_epoch; ++b) {
        batch.clear();
        for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(sample_path(dataset[pick(rng)], rng));
        run_batch(epoch, b, lr);
      }
    }
  }
  result.net = std::move(net);
  return result;
}

TrainResult train(std::span<const TrainingPair> dataset, const TrainConfig& cfg, const NetConfig& net_cfg) {
  Rng init_rng(derive_seed(cfg.seed, SeedStream::kInit));
  return train_from(init_params(init_rng, net_cfg), dataset, cfg);
}

}  // namespace fmvo
