#include "fmvo/trajeval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "fmvo/errors.hpp"

namespace fmvo {

namespace {

Eigen::Matrix3Xd positions(const Trajectory& t) {
  Eigen::Matrix3Xd p(3, static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) p.col(static_cast<Eigen::Index>(i)) = t.poses[i].translation;
  return p;
}

// RMS distance of the points from their best-fit line.
double line_residual(const Eigen::Matrix3Xd& centered) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::Vector3d sv = svd.singularValues();
  return std::sqrt((sv(1) * sv(1) + sv(2) * sv(2)) / static_cast<double>(centered.cols()));
}

void check_lengths(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) {
    throw InvalidArgument("trajectory lengths differ: " + std::to_string(est.size()) + " vs " +
                          std::to_string(gt.size()));
  }
}

}  // namespace

std::string_view to_string(ScaleMode m) {
  switch (m) {
    case ScaleMode::kPerPair:
      return "per_pair";
    case ScaleMode::kGlobal:
      return "global";
    case ScaleMode::kNone:
      return "none";
  }
  return "unknown";
}

std::string_view to_string(AlignMode m) {
  switch (m) {
    case AlignMode::kNone:
      return "none";
    case AlignMode::kSe3:
      return "se3";
    case AlignMode::kSim3:
      return "sim3";
  }
  return "unknown";
}

std::optional<ScaleMode> parse_scale_mode(std::string_view s) {
  if (s == "per_pair") return ScaleMode::kPerPair;
  if (s == "global") return ScaleMode::kGlobal;
  if (s == "none") return ScaleMode::kNone;
  return std::nullopt;
}

std::optional<AlignMode> parse_align_mode(std::string_view s) {
  if (s == "none") return AlignMode::kNone;
  if (s == "se3") return AlignMode::kSe3;
  if (s == "sim3") return AlignMode::kSim3;
  return std::nullopt;
}

Trajectory compose_trajectory(const RelativePose& start, std::span<const RelativePose> rels) {
  Trajectory t;
  t.stamps.reserve(rels.size() + 1);
  t.poses.reserve(rels.size() + 1);
  t.stamps.push_back(0.0);
  t.poses.push_back(start);
  for (std::size_t i = 0; i < rels.size(); ++i) {
    t.stamps.push_back(static_cast<double>(i + 1));
    t.poses.push_back(compose(t.poses.back(), rels[i]));
  }
  return t;
}

double global_scale_factor(std::span<const RelativePose> est, std::span<const RelativePose> gt) {
  if (est.size() != gt.size()) throw InvalidArgument("scale_align: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    num += est[i].translation.dot(gt[i].translation);
    den += est[i].translation.squaredNorm();
  }
  return den > 0.0 ? num / den : 1.0;
}

std::vector<RelativePose> scale_align(std::span<const RelativePose> est, std::span<const RelativePose> gt,
                                      ScaleMode mode) {
  if (est.size() != gt.size()) throw InvalidArgument("scale_align: length mismatch");
  std::vector<RelativePose> out(est.begin(), est.end());
  switch (mode) {
    case ScaleMode::kNone:
      break;
    case ScaleMode::kPerPair:
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double n_est = out[i].translation.norm();
        const double n_gt = gt[i].translation.norm();
        if (n_est > 0.0 && n_gt > 0.0) out[i].translation *= n_gt / n_est;
      }
      break;
    case ScaleMode::kGlobal: {
      const double s = global_scale_factor(est, gt);
      for (RelativePose& p : out) p.translation *= s;
      break;
    }
  }
  return out;
}

AlignmentResult umeyama_align(const Trajectory& est, const Trajectory& gt, bool with_scale) {
  check_lengths(est, gt);
  if (est.size() < 3) throw DegenerateError("alignment needs at least 3 poses");
  const Eigen::Matrix3Xd x = positions(est);
  const Eigen::Matrix3Xd y = positions(gt);
  const auto n = static_cast<double>(x.cols());
  const Eigen::Vector3d mu_x = x.rowwise().mean();
  const Eigen::Vector3d mu_y = y.rowwise().mean();
  const Eigen::Matrix3Xd xc = x.colwise() - mu_x;
  const Eigen::Matrix3Xd yc = y.colwise() - mu_y;
  if (line_residual(xc) < 1e-9 || line_residual(yc) < 1e-9) {
    throw DegenerateError("alignment is undetermined: points are collinear");
  }

  const Eigen::Matrix3d sigma = yc * xc.transpose() / n;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s_diag = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s_diag(2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();

  AlignmentResult res;
  res.rotation = Rotation::from_matrix(r);
  if (with_scale) {
    const double var_x = xc.squaredNorm() / n;
    res.scale = svd.singularValues().dot(s_diag) / var_x;
  }
  res.translation = mu_y - res.scale * r * mu_x;

  const Eigen::Matrix3Xd aligned = ((res.scale * r) * x).colwise() + res.translation;
  res.ate_rmse = std::sqrt((aligned - y).squaredNorm() / n);
  return res;
}

AteReport evaluate_ate(const Trajectory& est, const Trajectory& gt, AlignMode align) {
  check_lengths(est, gt);
  AteReport rep;
  if (align != AlignMode::kNone) rep.alignment = umeyama_align(est, gt, align == AlignMode::kSim3);
  if (est.empty()) return rep;
  double pos_sq = 0.0;
  double rot_sq = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 p = rep.alignment.apply(est.poses[i].translation);
    pos_sq += (p - gt.poses[i].translation).squaredNorm();
    const double angle = geodesic_angle(rep.alignment.rotation * est.poses[i].rotation, gt.poses[i].rotation);
    rot_sq += angle * angle;
  }
  const auto n = static_cast<double>(est.size());
  rep.ate_rmse = std::sqrt(pos_sq / n);
  rep.rot_rmse = std::sqrt(rot_sq / n);
  return rep;
}

double ate(const Trajectory& est, const Trajectory& gt, AlignMode align) {
  return evaluate_ate(est, gt, align).ate_rmse;
}

std::pair<Trajectory, Trajectory> associate_by_stamp(const Trajectory& est, const Trajectory& gt, double max_dt) {
  est.validate();
  gt.validate();
  std::pair<Trajectory, Trajectory> out;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est.stamps[i];
    const auto it = std::lower_bound(gt.stamps.begin(), gt.stamps.end(), t);
    std::size_t best = gt.size();
    double best_dt = max_dt;
    for (auto cand : {it, it == gt.stamps.begin() ? it : std::prev(it)}) {
      if (cand == gt.stamps.end()) continue;
      const double dt = std::abs(*cand - t);
      if (dt <= best_dt) {
        best_dt = dt;
        best = static_cast<std::size_t>(cand - gt.stamps.begin());
      }
    }
    if (best == gt.size()) continue;
    if (!out.second.stamps.empty() && gt.stamps[best] <= out.second.stamps.back()) continue;
    out.first.stamps.push_back(t);
    out.first.poses.push_back(est.poses[i]);
    out.second.stamps.push_back(gt.stamps[best]);
    out.second.poses.push_back(gt.poses[best]);
  }
  return out;
}

}  // namespace fmvo
