#include <fstream>
#include <sstream>

#include "fmvo/errors.hpp"
#include "fmvo/text_format.hpp"
#include "fmvo/trajectory.hpp"

namespace fmvo {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void Trajectory::validate() const {
  if (stamps.size() != poses.size()) throw InvalidArgument("trajectory stamps and poses differ in length");
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    if (!(stamps[i] > stamps[i - 1])) throw InvalidArgument("trajectory stamps must strictly increase");
  }
}

std::vector<RelativePose> relative_motions(const Trajectory& traj) {
  std::vector<RelativePose> rels;
  for (std::size_t i = 1; i < traj.poses.size(); ++i) {
    rels.push_back(compose(inverse(traj.poses[i - 1]), traj.poses[i]));
  }
  return rels;
}

std::string to_tum(const Trajectory& traj) {
  traj.validate();
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const RelativePose& p = traj.poses[i];
    const double v[8] = {traj.stamps[i],  p.translation.x(), p.translation.y(), p.translation.z(),
                         p.rotation.x(), p.rotation.y(),    p.rotation.z(),    p.rotation.w()};
    out += text::join_doubles(v, 8, ' ');
    out += '\n';
  }
  return out;
}

Trajectory parse_tum(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto f = text::split_whitespace(line);
    if (f.size() != 8) throw ParseError("TUM line needs 8 fields, found " + std::to_string(f.size()), line_no);
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = text::parse_double(f[static_cast<std::size_t>(i)], line_no);
    traj.stamps.push_back(v[0]);
    try {
      traj.poses.push_back({Rotation::from_quaternion(v[7], v[4], v[5], v[6]), Vec3(v[1], v[2], v[3])});
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  try {
    traj.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return traj;
}

void write_tum(const Trajectory& traj, const std::filesystem::path& path) { spit(path, to_tum(traj)); }
Trajectory read_tum(const std::filesystem::path& path) { return parse_tum(slurp(path)); }

std::string to_kitti(const Trajectory& traj) {
  std::string out;
  for (const RelativePose& p : traj.poses) {
    const Mat3 r = p.rotation.matrix();
    const double v[12] = {r(0, 0), r(0, 1), r(0, 2), p.translation.x(), r(1, 0), r(1, 1),
                          r(1, 2), p.translation.y(), r(2, 0), r(2, 1), r(2, 2), p.translation.z()};
    out += text::join_doubles(v, 12, ' ');
    out += '\n';
  }
  return out;
}

Trajectory parse_kitti(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    const auto f = text::split_whitespace(line);
    if (f.size() != 12) throw ParseError("KITTI line needs 12 fields, found " + std::to_string(f.size()), line_no);
    Mat4 m = Mat4::Identity();
    for (int i = 0; i < 12; ++i) m(i / 4, i % 4) = text::parse_double(f[static_cast<std::size_t>(i)], line_no);
    traj.stamps.push_back(static_cast<double>(traj.poses.size()));
    try {
      traj.poses.push_back(RelativePose::from_matrix(m));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return traj;
}

void write_kitti(const Trajectory& traj, const std::filesystem::path& path) { spit(path, to_kitti(traj)); }
Trajectory read_kitti(const std::filesystem::path& path) { return parse_kitti(slurp(path)); }

}  // namespace fmvo
