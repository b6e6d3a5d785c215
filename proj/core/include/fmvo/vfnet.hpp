#pragma once

// Conditioned time-dependent vector field u(x, tau, c) -> R^6.
//
// Layout:
//   time  : fixed sinusoidal features of tau (no parameters)
//   state : one tanh layer over the 6-D motion state
//   cond  : a small tanh MLP over the condition vector
//   trunk : tanh MLP over concat(time, state, cond)
//   heads : two tanh MLPs with linear 3-D outputs, rotation then translation
//
// The output layer of each head starts at zero, so a freshly initialized
// network predicts zero velocity everywhere.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fmvo/random.hpp"
#include "fmvo/se3.hpp"

namespace fmvo {

struct ConditionVector {
  Eigen::VectorXd values;

  Eigen::Index dim() const { return values.size(); }
};

enum class Activation { kTanh, kIdentity };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kTanh;

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
};

struct NetConfig {
  int cond_dim = 16;
  int time_embed_dim = 16;
  int state_embed_width = 16;
  int cond_embed_width = 16;
  int cond_embed_layers = 2;
  int trunk_width = 64;
  int trunk_layers = 2;
  int head_width = 32;
  int head_layers = 2;

  // Throws ConfigError on non-positive widths or an odd time embedding.
  void validate() const;
  int fused_width() const { return time_embed_dim + state_embed_width + cond_embed_width; }

  bool operator==(const NetConfig&) const = default;
};

class VectorFieldNet {
 public:
  static constexpr int kStateDim = 6;

  NetConfig config;
  std::vector<DenseLayer> state_embed;
  std::vector<DenseLayer> cond_embed;
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> head_rot;
  std::vector<DenseLayer> head_trans;

  // All layers in a fixed order: state, cond, trunk, rotation head,
  // translation head. Gradients, optimizer state and checkpoints use it.
  std::vector<DenseLayer*> layers();
  std::vector<const DenseLayer*> layers() const;

  std::size_t parameter_count() const;
  bool all_finite() const;

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& flat);

  // Throws ConfigError if layer shapes disagree with `config`.
  void check_shapes() const;
};

// One entry per parameter, ordered like VectorFieldNet::layers().
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static Gradients zeros_like(const VectorFieldNet& net);
  Eigen::VectorXd flatten() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

// [sin(2^j pi tau), cos(2^j pi tau)] for j = 0 .. dim/2 - 1, interleaved.
Eigen::VectorXd time_embedding(double tau, int dim);

VectorFieldNet init_params(Rng& rng, const NetConfig& config);

// Activations kept by forward_batch for the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;   // per layer, in x B
  std::vector<Eigen::MatrixXd> outputs;  // per layer, out x B (post-activation)
};

// Column b of `states` (6 x B), `taus` (B) and `conds` (k x B) is one query.
// Returns 6 x B velocities.
Eigen::MatrixXd forward_batch(const VectorFieldNet& net, const Eigen::MatrixXd& states,
                              const Eigen::VectorXd& taus, const Eigen::MatrixXd& conds,
                              ForwardCache* cache = nullptr);

// Gradient of sum_b <forward(b), upstream(b)> w.r.t. every parameter.
Gradients backward_batch(const VectorFieldNet& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream);

Vec6 forward(const VectorFieldNet& net, const MotionState& state, double tau, const ConditionVector& cond);

Gradients backward(const VectorFieldNet& net, const MotionState& state, double tau,
                   const ConditionVector& cond, const Vec6& upstream);

// Text checkpoint: key=value header then per-layer arrays, 17 significant digits.
std::string checkpoint_to_string(const VectorFieldNet& net);
VectorFieldNet checkpoint_from_string(const std::string& text);
void save_checkpoint(const VectorFieldNet& net, const std::filesystem::path& path);
VectorFieldNet load_checkpoint(const std::filesystem::path& path);

}  // namespace fmvo
