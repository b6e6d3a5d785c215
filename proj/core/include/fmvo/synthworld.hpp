#pragma once

// Synthetic ground truth: camera trajectories, their frame-to-frame motions
// and condition vectors that stand in for encoded optical flow.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fmvo/flowmatch.hpp"
#include "fmvo/random.hpp"
#include "fmvo/se3.hpp"
#include "fmvo/trajectory.hpp"
#include "fmvo/vfnet.hpp"

namespace fmvo {

enum class TrajectoryKind { kLine, kArc, kFigure8, kRandomWalk };

std::string_view to_string(TrajectoryKind k);
std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view s);

inline constexpr double kFrameInterval = 0.1;  // seconds between synthetic frames
inline constexpr double kMinStep = 0.01;       // meters
inline constexpr double kMaxStep = 1.0;        // meters
inline constexpr double kMaxStepRotation = 0.9 * 3.14159265358979323846;

// n >= 2 poses. The RNG is used only by the random walk.
Trajectory make_trajectory(TrajectoryKind kind, int n, Rng& rng);

// The constant per-frame motion of the arc trajectory.
RelativePose arc_step();

// Seeded lift from a motion to a condition vector. The translation scale
// enters one feature that ambiguity a attenuates by (1 - a); a = 1 removes
// all scale information.
class ConditionEncoder {
 public:
  ConditionEncoder(int dim, std::uint64_t lift_seed);

  int dim() const { return dim_; }
  std::uint64_t lift_seed() const { return lift_seed_; }

  ConditionVector encode(const RelativePose& rel, double ambiguity, double noise_sigma, Rng& rng) const;

 private:
  Eigen::VectorXd features(const RelativePose& rel, double ambiguity) const;

  int dim_;
  std::uint64_t lift_seed_;
  Eigen::MatrixXd linear_;
  Eigen::MatrixXd freq_;
  Eigen::VectorXd phase_;
};

// Convenience wrapper matching the free-function form.
ConditionVector encode_condition(const ConditionEncoder& encoder, const RelativePose& rel, double ambiguity,
                                 double noise_sigma, Rng& rng);

struct Scenario {
  std::string name;
  Trajectory gt_trajectory;
  std::vector<TrainingPair> pairs;
  double ambiguity = 0.0;
  double noise_sigma = 0.0;
  int cond_dim = 16;
  std::uint64_t lift_seed = 0;

  std::vector<ConditionVector> conditions() const;
  std::vector<RelativePose> gt_relative() const;
};

struct ScenarioSpec {
  std::string name = "scenario";
  TrajectoryKind kind = TrajectoryKind::kFigure8;
  int n = 200;
  double ambiguity = 0.0;
  double noise_sigma = 0.0;
  int cond_dim = 16;
  std::uint64_t seed = 0;
  // Reuse another scenario's encoder; defaults to one derived from `seed`.
  std::optional<std::uint64_t> lift_seed;
};

Scenario make_scenario(const ScenarioSpec& spec);

// Two fixed motions separated by more than 0.5 in state space.
std::pair<MotionState, MotionState> bimodal_modes();

// n (even, >= 2) pairs sharing one condition; targets drawn 50/50 from the
// two modes.
std::vector<TrainingPair> make_bimodal_dataset(int n, const ConditionEncoder& encoder, Rng& rng);

// ---- dataset files ------------------------------------------------------

struct DatasetHeader {
  int k = 16;
  std::uint64_t lift_seed = 0;
  double ambiguity = 0.0;
  double noise = 0.0;
};

struct FeatureRow {
  ConditionVector cond;
  std::optional<TrainingPair> pair;  // present when the row carries ground truth
};

struct FeatureSet {
  DatasetHeader header;
  std::vector<FeatureRow> rows;

  std::vector<TrainingPair> pairs() const;
  std::vector<ConditionVector> conditions() const;
};

// Header lines "#k=", "#lift_seed=", "#ambiguity=", "#noise=", then rows
// "rho_x,rho_y,rho_z,t_x,t_y,t_z,c_1..c_k" (or "c_1..c_k" without truth).
std::string features_to_string(const FeatureSet& set);
FeatureSet parse_features(const std::string& text);
void write_features(const FeatureSet& set, const std::filesystem::path& path);
FeatureSet ingest_features(const std::filesystem::path& path);

FeatureSet to_feature_set(const DatasetHeader& header, std::span<const TrainingPair> pairs);

}  // namespace fmvo
