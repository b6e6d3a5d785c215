#pragma once

// Rotations, rigid motions and the 6-D linearized motion state used by the
// flow-matching model. Rotations are unit quaternions kept in the w >= 0
// hemisphere so that the so(3) chart is single valued.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fmvo/random.hpp"

namespace fmvo {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Below this angle exp/log switch to their Taylor series.
inline constexpr double kSmallAngle = 1e-6;

class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  // Normalizes and canonicalizes. Throws InvalidArgument for zero or
  // non-finite input.
  static Rotation from_quaternion(double w, double x, double y, double z);
  static Rotation from_quaternion(const Eigen::Quaterniond& q) {
    return from_quaternion(q.w(), q.x(), q.y(), q.z());
  }
  static Rotation from_matrix(const Mat3& m);
  static Rotation identity() { return {}; }

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Vec3 rotate(const Vec3& v) const { return q_ * v; }
  Rotation inverse() const;

  friend Rotation operator*(const Rotation& a, const Rotation& b);

 private:
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) {}
  Eigen::Quaterniond q_;
};

// An element of SE(3): x_world = rotation * x_local + translation.
struct RelativePose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static RelativePose identity() { return {}; }
  Mat4 matrix() const;
  static RelativePose from_matrix(const Mat4& m);
};

// Linearized motion: so(3) axis-angle and translation, treated as one
// Euclidean 6-vector [rho; trans].
struct MotionState {
  Vec3 rho = Vec3::Zero();
  Vec3 trans = Vec3::Zero();

  Vec6 vector() const {
    Vec6 v;
    v << rho, trans;
    return v;
  }
  static MotionState from_vector(const Eigen::Ref<const Vec6>& v) {
    return {v.head<3>(), v.tail<3>()};
  }
};

Rotation exp_map(const Vec3& rho);

// Principal branch, |result| <= pi. At exactly pi the axis is the one whose
// first nonzero component is positive.
Vec3 log_map(const Rotation& r);

RelativePose compose(const RelativePose& a, const RelativePose& b);
RelativePose inverse(const RelativePose& p);

MotionState pose_to_state(const RelativePose& p);
RelativePose state_to_pose(const MotionState& s);

// Draws from the base distribution: trans ~ N(0, I3), rotation uniform on
// SO(3) (normalized 4-D Gaussian), returned in so(3) coordinates.
MotionState sample_initial(Rng& rng);

Rotation sample_uniform_rotation(Rng& rng);

// Angle of a^-1 b in radians, in [0, pi].
double geodesic_angle(const Rotation& a, const Rotation& b);

}  // namespace fmvo
