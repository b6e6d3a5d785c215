#pragma once

// Odometry metrics: chaining relative motions, translation scale alignment,
// Umeyama sim(3)/se(3) alignment and absolute trajectory error.

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "fmvo/se3.hpp"
#include "fmvo/trajectory.hpp"

namespace fmvo {

// pose_0 = start, pose_i = start * rel_1 * ... * rel_i; stamps 0, 1, ..., n.
Trajectory compose_trajectory(const RelativePose& start, std::span<const RelativePose> rels);

enum class ScaleMode { kPerPair, kGlobal, kNone };
enum class AlignMode { kNone, kSe3, kSim3 };

std::string_view to_string(ScaleMode m);
std::string_view to_string(AlignMode m);
std::optional<ScaleMode> parse_scale_mode(std::string_view s);
std::optional<AlignMode> parse_align_mode(std::string_view s);

// per_pair: each estimated translation takes its ground-truth norm (left
// as is when either norm is zero). global: one least-squares factor
// s = sum<t_est, t_gt> / sum<t_est, t_est>. Rotations are untouched.
std::vector<RelativePose> scale_align(std::span<const RelativePose> est, std::span<const RelativePose> gt,
                                      ScaleMode mode);

double global_scale_factor(std::span<const RelativePose> est, std::span<const RelativePose> gt);

struct AlignmentResult {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
  double ate_rmse = 0.0;

  Vec3 apply(const Vec3& p) const { return scale * rotation.rotate(p) + translation; }
};

// Closed-form minimizer of sum ||s R p_est + t - p_gt||^2 over positions.
// Throws DegenerateError when either point set is collinear (or has fewer
// than 3 points).
AlignmentResult umeyama_align(const Trajectory& est, const Trajectory& gt, bool with_scale);

// Position RMSE after the requested alignment. Lengths must match.
double ate(const Trajectory& est, const Trajectory& gt, AlignMode align);

struct AteReport {
  AlignmentResult alignment;
  double ate_rmse = 0.0;
  double rot_rmse = 0.0;  // radians, supplementary
};

AteReport evaluate_ate(const Trajectory& est, const Trajectory& gt, AlignMode align);

// Pairs each estimated pose with the nearest ground-truth stamp within
// max_dt seconds; unmatched estimates are dropped.
std::pair<Trajectory, Trajectory> associate_by_stamp(const Trajectory& est, const Trajectory& gt,
                                                     double max_dt = 0.02);

}  // namespace fmvo
