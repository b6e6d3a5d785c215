#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fmvo/random.hpp"
#include "fmvo/se3.hpp"
#include "fmvo/vfnet.hpp"

namespace fmvo {

enum class SolverMethod { kEuler, kMidpoint, kRk4 };

std::string_view to_string(SolverMethod m);
std::optional<SolverMethod> parse_solver_method(std::string_view s);

struct SolverConfig {
  SolverMethod method = SolverMethod::kMidpoint;
  int steps = 5;
};

// Velocity of each column of a state matrix at time tau.
using BatchField = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& states, double tau)>;

// Fixed-step explicit integration of dx/dtau = field(x, tau) over [0, 1].
// Columns are independent trajectories. Throws NumericalError naming the
// step index if a non-finite state appears.
Eigen::MatrixXd integrate(const BatchField& field, Eigen::MatrixXd x0, const SolverConfig& cfg);

MotionState integrate(const VectorFieldNet& net, const MotionState& x0, const ConditionVector& cond,
                      const SolverConfig& cfg);

struct PoseSampleSet {
  std::vector<RelativePose> samples;
  MotionState mean_state;
  Vec6 std_state = Vec6::Zero();  // population standard deviation per component

  RelativePose estimate() const { return state_to_pose(mean_state); }
};

// Draws m base samples from `rng` in order and integrates all of them.
PoseSampleSet estimate_pose(const VectorFieldNet& net, const ConditionVector& cond, const SolverConfig& cfg, int m,
                            Rng& rng);

// Pair i uses Rng(derive_seed(seed, SeedStream::kInfer, i)), so results do
// not depend on evaluation order.
std::vector<PoseSampleSet> estimate_sequence(const VectorFieldNet& net, std::span<const ConditionVector> conds,
                                             const SolverConfig& cfg, int m, std::uint64_t seed);

// Mean and population std of pose_to_state over the samples.
void summarize_samples(PoseSampleSet& set);

}  // namespace fmvo
