#include "fmvo/se3.hpp"

#include <cmath>
#include <numbers>

#include "fmvo/errors.hpp"

namespace fmvo {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    // Antipodal pair on the w = 0 equator: keep first nonzero axis entry positive.
    for (double c : {q.x(), q.y(), q.z()}) {
      if (c != 0.0) {
        flip = c < 0.0;
        break;
      }
    }
  }
  if (flip) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  if (!q.coeffs().allFinite()) throw InvalidArgument("quaternion has non-finite components");
  const double n = q.norm();
  if (n == 0.0) throw InvalidArgument("zero quaternion");
  q.coeffs() /= n;
  return Rotation(canonical(q));
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw InvalidArgument("rotation matrix has non-finite entries");
  return from_quaternion(Eigen::Quaterniond(m));
}

Rotation Rotation::inverse() const { return Rotation(canonical(q_.conjugate())); }

Rotation operator*(const Rotation& a, const Rotation& b) {
  Eigen::Quaterniond q = a.q_ * b.q_;
  q.normalize();
  return Rotation(canonical(q));
}

Mat4 RelativePose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RelativePose RelativePose::from_matrix(const Mat4& m) {
  return {Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Rotation exp_map(const Vec3& rho) {
  if (!rho.allFinite()) throw InvalidArgument("exp_map: non-finite rotation vector");
  const double theta2 = rho.squaredNorm();
  const double theta = std::sqrt(theta2);
  double w = 0.0;
  double k = 0.0;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    w = 1.0 - theta2 / 8.0;
    k = 0.5 - theta2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  return Rotation::from_quaternion(w, k * rho.x(), k * rho.y(), k * rho.z());
}

Vec3 log_map(const Rotation& r) {
  const Vec3 v(r.x(), r.y(), r.z());
  const double n = v.norm();
  const double w = r.w();  // >= 0 by construction
  if (n < 0.5 * kSmallAngle) {
    // 2 atan(n / w) / n ~= (2 / w) (1 - n^2 / (3 w^2))
    const double k = 2.0 / w * (1.0 - n * n / (3.0 * w * w));
    return k * v;
  }
  const double theta = 2.0 * std::atan2(n, w);
  return (theta / n) * v;
}

RelativePose compose(const RelativePose& a, const RelativePose& b) {
  return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

RelativePose inverse(const RelativePose& p) {
  const Rotation inv = p.rotation.inverse();
  return {inv, -inv.rotate(p.translation)};
}

MotionState pose_to_state(const RelativePose& p) { return {log_map(p.rotation), p.translation}; }

RelativePose state_to_pose(const MotionState& s) {
  if (!s.trans.allFinite()) throw InvalidArgument("state_to_pose: non-finite translation");
  return {exp_map(s.rho), s.trans};
}

Rotation sample_uniform_rotation(Rng& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    const double w = normal(rng);
    const double x = normal(rng);
    const double y = normal(rng);
    const double z = normal(rng);
    if (w * w + x * x + y * y + z * z > 1e-300) return Rotation::from_quaternion(w, x, y, z);
  }
}

MotionState sample_initial(Rng& rng) {
  std::normal_distribution<double> normal;
  MotionState s;
  s.trans.x() = normal(rng);
  s.trans.y() = normal(rng);
  s.trans.z() = normal(rng);
  s.rho = log_map(sample_uniform_rotation(rng));
  return s;
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
  return log_map(a.inverse() * b).norm();
}

}  // namespace fmvo
