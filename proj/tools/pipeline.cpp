#include "pipeline.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "fmvo/errors.hpp"
#include "fmvo/text_format.hpp"

namespace fmvo::cli {

std::pair<double, double> mean_std(std::span<const PoseSampleSet> sets) {
  if (sets.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double rot = 0.0;
  double trans = 0.0;
  for (const PoseSampleSet& s : sets) {
    rot += s.std_state.head<3>().mean();
    trans += s.std_state.tail<3>().mean();
  }
  const auto n = static_cast<double>(sets.size());
  return {rot / n, trans / n};
}

std::vector<RelativePose> estimates_of(std::span<const PoseSampleSet> sets) {
  std::vector<RelativePose> out;
  out.reserve(sets.size());
  for (const PoseSampleSet& s : sets) out.push_back(s.estimate());
  return out;
}

EvalRow evaluate_relatives(std::span<const RelativePose> est_rels, std::span<const RelativePose> gt_rels,
                           AlignMode align, ScaleMode scale) {
  const std::vector<RelativePose> scaled = scale_align(est_rels, gt_rels, scale);
  const Trajectory est = compose_trajectory(RelativePose::identity(), scaled);
  const Trajectory gt = compose_trajectory(RelativePose::identity(), gt_rels);
  const AteReport rep = evaluate_ate(est, gt, align);
  EvalRow row;
  row.align = align;
  row.scale = scale;
  row.ate_rmse = rep.ate_rmse;
  row.ate_rot_rmse = rep.rot_rmse;
  row.mean_std_rot = std::numeric_limits<double>::quiet_NaN();
  row.mean_std_trans = std::numeric_limits<double>::quiet_NaN();
  return row;
}

EvalRow evaluate_trajectories(const Trajectory& est, const Trajectory& gt, AlignMode align, ScaleMode scale) {
  if (est.size() != gt.size()) {
    throw InvalidArgument("trajectory lengths differ: " + std::to_string(est.size()) + " vs " +
                          std::to_string(gt.size()));
  }
  Trajectory aligned = est;
  if (scale != ScaleMode::kNone && !est.empty()) {
    const auto scaled = scale_align(relative_motions(est), relative_motions(gt), scale);
    aligned = compose_trajectory(est.poses.front(), scaled);
    aligned.stamps = est.stamps;
  }
  const AteReport rep = evaluate_ate(aligned, gt, align);
  EvalRow row;
  row.align = align;
  row.scale = scale;
  row.ate_rmse = rep.ate_rmse;
  row.ate_rot_rmse = rep.rot_rmse;
  row.mean_std_rot = std::numeric_limits<double>::quiet_NaN();
  row.mean_std_trans = std::numeric_limits<double>::quiet_NaN();
  return row;
}

std::string estimates_csv(std::span<const PoseSampleSet> sets) {
  std::string out = "pair_index,rho_x,rho_y,rho_z,t_x,t_y,t_z,std_1,std_2,std_3,std_4,std_5,std_6\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const Vec6 mean = sets[i].mean_state.vector();
    out += std::to_string(i);
    out += ',';
    out += text::join_doubles(mean.data(), 6, ',');
    out += ',';
    out += text::join_doubles(sets[i].std_state.data(), 6, ',');
    out += '\n';
  }
  return out;
}

std::vector<EstimateRow> parse_estimates_csv(const std::string& csv) {
  std::vector<EstimateRow> rows;
  std::istringstream in(csv);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("pair_index")) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 13) throw ParseError("estimate row needs 13 fields", line_no);
    Vec6 mean;
    EstimateRow row;
    for (int i = 0; i < 6; ++i) mean(i) = text::parse_double(f[static_cast<std::size_t>(1 + i)], line_no);
    for (int i = 0; i < 6; ++i) row.std(i) = text::parse_double(f[static_cast<std::size_t>(7 + i)], line_no);
    row.mean = MotionState::from_vector(mean);
    rows.push_back(row);
  }
  return rows;
}

std::string metrics_csv_row(const EvalRow& row) {
  std::string out = row.scenario;
  out += ',';
  out += to_string(row.align);
  out += ',';
  out += to_string(row.scale);
  for (double v : {row.ate_rmse, row.mean_std_rot, row.mean_std_trans, row.ate_rot_rmse}) {
    out += ',';
    out += text::format_double(v);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace fmvo::cli
