#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fmvo/se3.hpp"

namespace fmvo {

// Timestamped world-from-camera poses. Translation in meters.
struct Trajectory {
  std::vector<double> stamps;
  std::vector<RelativePose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }

  // Throws InvalidArgument unless lengths agree and stamps strictly increase.
  void validate() const;
};

// rel_i = pose_i^-1 * pose_{i+1}
std::vector<RelativePose> relative_motions(const Trajectory& traj);

// TUM RGB-D format: "timestamp tx ty tz qx qy qz qw" per line; '#' comments.
std::string to_tum(const Trajectory& traj);
Trajectory parse_tum(const std::string& text);
void write_tum(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_tum(const std::filesystem::path& path);

// KITTI odometry format: 12 reals per line, row-major [R | t]. Stamps are
// assigned as the line index.
std::string to_kitti(const Trajectory& traj);
Trajectory parse_kitti(const std::string& text);
void write_kitti(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_kitti(const std::filesystem::path& path);

}  // namespace fmvo
