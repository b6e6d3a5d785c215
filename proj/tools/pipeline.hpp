#pragma once

// Pieces shared by the infer, eval and ablate-steps commands.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fmvo/sampler.hpp"
#include "fmvo/trajeval.hpp"

namespace fmvo::cli {

struct EvalRow {
  std::string scenario;
  AlignMode align = AlignMode::kSim3;
  ScaleMode scale = ScaleMode::kPerPair;
  double ate_rmse = 0.0;
  double mean_std_rot = 0.0;
  double mean_std_trans = 0.0;
  double ate_rot_rmse = 0.0;
};

// Mean over pairs of the average rotation / translation std components.
std::pair<double, double> mean_std(std::span<const PoseSampleSet> sets);

std::vector<RelativePose> estimates_of(std::span<const PoseSampleSet> sets);

// Scale-aligns estimated relatives against ground truth, chains both from
// the identity and reports ATE under `align`.
EvalRow evaluate_relatives(std::span<const RelativePose> est_rels, std::span<const RelativePose> gt_rels,
                           AlignMode align, ScaleMode scale);

// Same as above for absolute trajectories of equal length; the estimate is
// re-chained from its own first pose after scale alignment.
EvalRow evaluate_trajectories(const Trajectory& est, const Trajectory& gt, AlignMode align, ScaleMode scale);

// pair_index,rho_x,rho_y,rho_z,t_x,t_y,t_z,std_1..std_6
std::string estimates_csv(std::span<const PoseSampleSet> sets);

struct EstimateRow {
  MotionState mean;
  Vec6 std = Vec6::Zero();
};
std::vector<EstimateRow> parse_estimates_csv(const std::string& text);

inline constexpr const char* kMetricsHeader =
    "scenario,align_mode,scale_mode,ate_rmse,mean_std_rot,mean_std_trans,ate_rot_rmse";
std::string metrics_csv_row(const EvalRow& row);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fmvo::cli
