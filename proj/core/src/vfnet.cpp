#include "fmvo/vfnet.hpp"

#include <cmath>
#include <numbers>

#include "fmvo/errors.hpp"

namespace fmvo {

namespace {

DenseLayer make_layer(Rng& rng, int in, int out, Activation act, bool zero) {
  DenseLayer layer;
  layer.weight = Eigen::MatrixXd::Zero(out, in);
  layer.bias = Eigen::VectorXd::Zero(out);
  layer.activation = act;
  if (!zero) {
    // He-style uniform bound on fan-in.
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = uni(rng);
    }
  }
  return layer;
}

std::vector<DenseLayer> make_mlp(Rng& rng, int in, int width, int count) {
  std::vector<DenseLayer> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(make_layer(rng, i == 0 ? in : width, width, Activation::kTanh, false));
  }
  return out;
}

std::vector<DenseLayer> make_head(Rng& rng, int in, int width, int count) {
  std::vector<DenseLayer> out = make_mlp(rng, in, width, count);
  out.push_back(make_layer(rng, count == 0 ? in : width, 3, Activation::kIdentity, true));
  return out;
}

// Runs one group of layers, recording activations from `first` onward.
Eigen::MatrixXd run_group(const std::vector<DenseLayer>& group, Eigen::MatrixXd x, std::size_t first,
                          ForwardCache* cache) {
  for (std::size_t i = 0; i < group.size(); ++i) {
    const DenseLayer& layer = group[i];
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    if (layer.activation == Activation::kTanh) z = z.array().tanh().matrix();
    if (cache != nullptr) {
      cache->inputs[first + i] = std::move(x);
      cache->outputs[first + i] = z;
    }
    x = std::move(z);
  }
  return x;
}

// Backpropagates d(output) through a group; returns d(input).
Eigen::MatrixXd back_group(const std::vector<DenseLayer>& group, Eigen::MatrixXd grad, std::size_t first,
                           const ForwardCache& cache, Gradients& out) {
  for (std::size_t k = group.size(); k-- > 0;) {
    const DenseLayer& layer = group[k];
    const std::size_t idx = first + k;
    if (layer.activation == Activation::kTanh) {
      const Eigen::MatrixXd& a = cache.outputs[idx];
      grad = (grad.array() * (1.0 - a.array().square())).matrix();
    }
    out.weight[idx].noalias() += grad * cache.inputs[idx].transpose();
    out.bias[idx] += grad.rowwise().sum();
    grad = layer.weight.transpose() * grad;
  }
  return grad;
}

struct GroupOffsets {
  std::size_t state, cond, trunk, rot, trans, total;
};

GroupOffsets offsets(const VectorFieldNet& net) {
  GroupOffsets o{};
  o.state = 0;
  o.cond = o.state + net.state_embed.size();
  o.trunk = o.cond + net.cond_embed.size();
  o.rot = o.trunk + net.trunk.size();
  o.trans = o.rot + net.head_rot.size();
  o.total = o.trans + net.head_trans.size();
  return o;
}

void check_group(const std::vector<DenseLayer>& group, Eigen::Index in, const char* name) {
  for (const DenseLayer& layer : group) {
    if (layer.in() != in || layer.bias.size() != layer.out()) {
      throw ConfigError(std::string("layer shape mismatch in ") + name);
    }
    in = layer.out();
  }
}

}  // namespace

void NetConfig::validate() const {
  if (cond_dim <= 0 || time_embed_dim <= 0 || state_embed_width <= 0 || cond_embed_width <= 0 ||
      trunk_width <= 0 || head_width <= 0) {
    throw ConfigError("network widths must be positive");
  }
  if (cond_embed_layers <= 0 || trunk_layers <= 0 || head_layers < 0) {
    throw ConfigError("network layer counts must be positive");
  }
  if (time_embed_dim % 2 != 0) throw ConfigError("time_embed_dim must be even");
  if (time_embed_dim > 2 * 40) throw ConfigError("time_embed_dim too large");
}

std::vector<DenseLayer*> VectorFieldNet::layers() {
  std::vector<DenseLayer*> out;
  for (auto* group : {&state_embed, &cond_embed, &trunk, &head_rot, &head_trans}) {
    for (DenseLayer& l : *group) out.push_back(&l);
  }
  return out;
}

std::vector<const DenseLayer*> VectorFieldNet::layers() const {
  std::vector<const DenseLayer*> out;
  for (const auto* group : {&state_embed, &cond_embed, &trunk, &head_rot, &head_trans}) {
    for (const DenseLayer& l : *group) out.push_back(&l);
  }
  return out;
}

std::size_t VectorFieldNet::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer* l : layers()) n += l->parameter_count();
  return n;
}

bool VectorFieldNet::all_finite() const {
  for (const DenseLayer* l : layers()) {
    if (!l->weight.allFinite() || !l->bias.allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd VectorFieldNet::flat_parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const DenseLayer* l : layers()) {
    // Row-major weight order to match the checkpoint layout.
    for (Eigen::Index r = 0; r < l->weight.rows(); ++r) {
      flat.segment(pos, l->weight.cols()) = l->weight.row(r).transpose();
      pos += l->weight.cols();
    }
    flat.segment(pos, l->bias.size()) = l->bias;
    pos += l->bias.size();
  }
  return flat;
}

void VectorFieldNet::set_flat_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw ConfigError("parameter vector length does not match network");
  }
  Eigen::Index pos = 0;
  for (DenseLayer* l : layers()) {
    for (Eigen::Index r = 0; r < l->weight.rows(); ++r) {
      l->weight.row(r) = flat.segment(pos, l->weight.cols()).transpose();
      pos += l->weight.cols();
    }
    l->bias = flat.segment(pos, l->bias.size());
    pos += l->bias.size();
  }
}

void VectorFieldNet::check_shapes() const {
  config.validate();
  if (state_embed.empty() || cond_embed.empty() || trunk.empty() || head_rot.empty() || head_trans.empty()) {
    throw ConfigError("network has an empty layer group");
  }
  check_group(state_embed, kStateDim, "state_embed");
  check_group(cond_embed, config.cond_dim, "cond_embed");
  if (state_embed.back().out() != config.state_embed_width || cond_embed.back().out() != config.cond_embed_width) {
    throw ConfigError("embedding widths disagree with config");
  }
  check_group(trunk, config.fused_width(), "trunk");
  check_group(head_rot, trunk.back().out(), "head_rot");
  check_group(head_trans, trunk.back().out(), "head_trans");
  if (head_rot.back().out() != 3 || head_trans.back().out() != 3) throw ConfigError("heads must output 3 values");
}

Gradients Gradients::zeros_like(const VectorFieldNet& net) {
  Gradients g;
  for (const DenseLayer* l : net.layers()) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l->weight.rows(), l->weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l->bias.size()));
  }
  return g;
}

Eigen::VectorXd Gradients::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) n += weight[i].size() + bias[i].size();
  Eigen::VectorXd flat(n);
  Eigen::Index pos = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    for (Eigen::Index r = 0; r < weight[i].rows(); ++r) {
      flat.segment(pos, weight[i].cols()) = weight[i].row(r).transpose();
      pos += weight[i].cols();
    }
    flat.segment(pos, bias[i].size()) = bias[i];
    pos += bias[i].size();
  }
  return flat;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw ConfigError("gradient shape mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] *= s;
    bias[i] *= s;
  }
  return *this;
}

Eigen::VectorXd time_embedding(double tau, int dim) {
  Eigen::VectorXd e(dim);
  double freq = std::numbers::pi;
  for (int j = 0; j < dim / 2; ++j) {
    e(2 * j) = std::sin(freq * tau);
    e(2 * j + 1) = std::cos(freq * tau);
    freq *= 2.0;
  }
  return e;
}

VectorFieldNet init_params(Rng& rng, const NetConfig& config) {
  config.validate();
  VectorFieldNet net;
  net.config = config;
  net.state_embed = make_mlp(rng, VectorFieldNet::kStateDim, config.state_embed_width, 1);
  net.cond_embed = make_mlp(rng, config.cond_dim, config.cond_embed_width, config.cond_embed_layers);
  net.trunk = make_mlp(rng, config.fused_width(), config.trunk_width, config.trunk_layers);
  net.head_rot = make_head(rng, config.trunk_width, config.head_width, config.head_layers);
  net.head_trans = make_head(rng, config.trunk_width, config.head_width, config.head_layers);
  return net;
}

Eigen::MatrixXd forward_batch(const VectorFieldNet& net, const Eigen::MatrixXd& states, const Eigen::VectorXd& taus,
                              const Eigen::MatrixXd& conds, ForwardCache* cache) {
  const NetConfig& cfg = net.config;
  const Eigen::Index batch = states.cols();
  if (states.rows() != VectorFieldNet::kStateDim) throw ConfigError("state batch must have 6 rows");
  if (taus.size() != batch || conds.cols() != batch) throw ConfigError("batch sizes disagree");
  if (conds.rows() != cfg.cond_dim) {
    throw ConfigError("condition dimension " + std::to_string(conds.rows()) + " does not match network (" +
                      std::to_string(cfg.cond_dim) + ")");
  }
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (!(taus(b) >= 0.0 && taus(b) <= 1.0)) throw InvalidArgument("tau must lie in [0, 1]");
  }

  const GroupOffsets off = offsets(net);
  if (cache != nullptr) {
    cache->inputs.assign(off.total, {});
    cache->outputs.assign(off.total, {});
  }

  Eigen::MatrixXd fused(cfg.fused_width(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) fused.col(b).head(cfg.time_embed_dim) = time_embedding(taus(b), cfg.time_embed_dim);
  fused.middleRows(cfg.time_embed_dim, cfg.state_embed_width) = run_group(net.state_embed, states, off.state, cache);
  fused.bottomRows(cfg.cond_embed_width) = run_group(net.cond_embed, conds, off.cond, cache);

  const Eigen::MatrixXd hidden = run_group(net.trunk, std::move(fused), off.trunk, cache);
  Eigen::MatrixXd out(VectorFieldNet::kStateDim, batch);
  out.topRows(3) = run_group(net.head_rot, hidden, off.rot, cache);
  out.bottomRows(3) = run_group(net.head_trans, hidden, off.trans, cache);
  return out;
}

Gradients backward_batch(const VectorFieldNet& net, const ForwardCache& cache, const Eigen::MatrixXd& upstream) {
  const NetConfig& cfg = net.config;
  const GroupOffsets off = offsets(net);
  if (cache.inputs.size() != off.total) throw ConfigError("forward cache does not match network");
  if (upstream.rows() != VectorFieldNet::kStateDim || upstream.cols() != cache.inputs.front().cols()) {
    throw ConfigError("upstream gradient shape mismatch");
  }

  Gradients g = Gradients::zeros_like(net);
  Eigen::MatrixXd d_hidden = back_group(net.head_rot, upstream.topRows(3), off.rot, cache, g);
  d_hidden += back_group(net.head_trans, upstream.bottomRows(3), off.trans, cache, g);
  const Eigen::MatrixXd d_fused = back_group(net.trunk, std::move(d_hidden), off.trunk, cache, g);
  back_group(net.state_embed, d_fused.middleRows(cfg.time_embed_dim, cfg.state_embed_width), off.state, cache, g);
  back_group(net.cond_embed, d_fused.bottomRows(cfg.cond_embed_width), off.cond, cache, g);
  return g;
}

Vec6 forward(const VectorFieldNet& net, const MotionState& state, double tau, const ConditionVector& cond) {
  Eigen::VectorXd taus(1);
  taus(0) = tau;
  return forward_batch(net, state.vector(), taus, cond.values);
}

Gradients backward(const VectorFieldNet& net, const MotionState& state, double tau, const ConditionVector& cond,
                   const Vec6& upstream) {
  Eigen::VectorXd taus(1);
  taus(0) = tau;
  ForwardCache cache;
  forward_batch(net, state.vector(), taus, cond.values, &cache);
  return backward_batch(net, cache, upstream);
}

}  // namespace fmvo
