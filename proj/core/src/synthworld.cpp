#include "fmvo/synthworld.hpp"

#include <cmath>
#include <numbers>

#include "fmvo/errors.hpp"

namespace fmvo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gains that bring rotation and scale features to the same order as the
// unit translation direction.
constexpr double kRotationGain = 4.0;
constexpr double kScaleGain = 2.0;
constexpr int kFeatureDim = 7;

Rotation euler_zyx(double yaw, double pitch, double roll) {
  return exp_map(Vec3(0, 0, yaw)) * exp_map(Vec3(0, pitch, 0)) * exp_map(Vec3(roll, 0, 0));
}

Trajectory line_trajectory(int n) {
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    t.stamps.push_back(i * kFrameInterval);
    t.poses.push_back({Rotation::identity(), Vec3(static_cast<double>(i), 0, 0)});
  }
  return t;
}

Trajectory arc_trajectory(int n) {
  Trajectory t;
  RelativePose pose;
  const RelativePose step = arc_step();
  for (int i = 0; i < n; ++i) {
    t.stamps.push_back(i * kFrameInterval);
    t.poses.push_back(pose);
    pose = compose(pose, step);
  }
  return t;
}

// Lemniscate of Gerono in the ground plane with gentle height, pitch and roll
// oscillation; the camera x axis follows the path tangent.
Trajectory figure8_trajectory(int n) {
  const int denom = std::max(n - 1, 8);
  const double ds = kTwoPi / denom;
  const double amp = 0.12 / ds;  // about 0.12 m per unit-speed step
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    const double s = i * ds;
    const Vec3 pos(amp * std::sin(s), 0.5 * amp * std::sin(2 * s), 0.05 * amp * std::sin(s));
    const double yaw = std::atan2(std::cos(2 * s), std::cos(s));
    const double pitch = 0.1 * std::sin(3 * s);
    const double roll = 0.05 * std::sin(2 * s);
    t.stamps.push_back(i * kFrameInterval);
    t.poses.push_back({euler_zyx(yaw, pitch, roll), pos});
  }
  return t;
}

Trajectory random_walk_trajectory(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> length(0.05, kMaxStep);
  Trajectory t;
  RelativePose pose;
  for (int i = 0; i < n; ++i) {
    t.stamps.push_back(i * kFrameInterval);
    t.poses.push_back(pose);
    const Vec3 rho(0.03 * normal(rng), 0.03 * normal(rng), 0.08 * normal(rng));
    Vec3 dir(1.0, 0.2 * normal(rng), 0.1 * normal(rng));
    dir.normalize();
    pose = compose(pose, {exp_map(rho), length(rng) * dir});
  }
  return t;
}

}  // namespace

std::string_view to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kLine:
      return "line";
    case TrajectoryKind::kArc:
      return "arc";
    case TrajectoryKind::kFigure8:
      return "figure8";
    case TrajectoryKind::kRandomWalk:
      return "random-walk";
  }
  return "unknown";
}

std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view s) {
  if (s == "line") return TrajectoryKind::kLine;
  if (s == "arc") return TrajectoryKind::kArc;
  if (s == "figure8") return TrajectoryKind::kFigure8;
  if (s == "random-walk") return TrajectoryKind::kRandomWalk;
  return std::nullopt;
}

RelativePose arc_step() { return {exp_map(Vec3(0.02, -0.03, 0.1)), Vec3(0.4, 0.05, -0.03)}; }

Trajectory make_trajectory(TrajectoryKind kind, int n, Rng& rng) {
  if (n < 2) throw InvalidArgument("make_trajectory: n must be >= 2");
  switch (kind) {
    case TrajectoryKind::kLine:
      return line_trajectory(n);
    case TrajectoryKind::kArc:
      return arc_trajectory(n);
    case TrajectoryKind::kFigure8:
      return figure8_trajectory(n);
    case TrajectoryKind::kRandomWalk:
      return random_walk_trajectory(n, rng);
  }
  throw InvalidArgument("make_trajectory: unknown kind");
}

ConditionEncoder::ConditionEncoder(int dim, std::uint64_t lift_seed) : dim_(dim), lift_seed_(lift_seed) {
  if (dim < 1) throw ConfigError("condition dimension must be positive");
  Rng rng(lift_seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  const int n_linear = (dim + 1) / 2;
  const int n_sin = dim - n_linear;
  linear_.resize(n_linear, kFeatureDim);
  freq_.resize(n_sin, kFeatureDim);
  phase_.resize(n_sin);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
  for (Eigen::Index r = 0; r < linear_.rows(); ++r) {
    for (Eigen::Index c = 0; c < kFeatureDim; ++c) linear_(r, c) = scale * normal(rng);
  }
  for (Eigen::Index r = 0; r < freq_.rows(); ++r) {
    for (Eigen::Index c = 0; c < kFeatureDim; ++c) freq_(r, c) = scale * normal(rng);
    phase_(r) = angle(rng);
  }
}

Eigen::VectorXd ConditionEncoder::features(const RelativePose& rel, double ambiguity) const {
  const Vec3 rho = log_map(rel.rotation);
  const double scale = rel.translation.norm();
  const Vec3 dir = scale > 1e-12 ? Vec3(rel.translation / scale) : Vec3::Zero();
  Eigen::Matrix<double, kFeatureDim, 1> z;
  z << kRotationGain * rho, dir, kScaleGain * (1.0 - ambiguity) * scale;

  Eigen::VectorXd c(dim_);
  c.head(linear_.rows()) = linear_ * z;
  c.tail(freq_.rows()) = ((freq_ * z) + phase_).array().sin().matrix();
  return c;
}

ConditionVector ConditionEncoder::encode(const RelativePose& rel, double ambiguity, double noise_sigma,
                                         Rng& rng) const {
  if (!(ambiguity >= 0.0 && ambiguity <= 1.0)) throw InvalidArgument("ambiguity must lie in [0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise sigma must be >= 0");
  ConditionVector out{features(rel, ambiguity)};
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values(i) += normal(rng);
  }
  return out;
}

ConditionVector encode_condition(const ConditionEncoder& encoder, const RelativePose& rel, double ambiguity,
                                 double noise_sigma, Rng& rng) {
  return encoder.encode(rel, ambiguity, noise_sigma, rng);
}

std::vector<ConditionVector> Scenario::conditions() const {
  std::vector<ConditionVector> out;
  out.reserve(pairs.size());
  for (const TrainingPair& p : pairs) out.push_back(p.cond);
  return out;
}

std::vector<RelativePose> Scenario::gt_relative() const { return relative_motions(gt_trajectory); }

Scenario make_scenario(const ScenarioSpec& spec) {
  if (!(spec.ambiguity >= 0.0 && spec.ambiguity <= 1.0)) throw InvalidArgument("ambiguity must lie in [0, 1]");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  Scenario sc;
  sc.name = spec.name;
  sc.ambiguity = spec.ambiguity;
  sc.noise_sigma = spec.noise_sigma;
  sc.cond_dim = spec.cond_dim;
  sc.lift_seed = spec.lift_seed.value_or(derive_seed(spec.seed, SeedStream::kLift));

  Rng traj_rng(derive_seed(spec.seed, SeedStream::kGenerate));
  sc.gt_trajectory = make_trajectory(spec.kind, spec.n, traj_rng);

  const ConditionEncoder encoder(spec.cond_dim, sc.lift_seed);
  Rng noise_rng(derive_seed(spec.seed, SeedStream::kCondNoise));
  for (const RelativePose& rel : relative_motions(sc.gt_trajectory)) {
    sc.pairs.push_back({pose_to_state(rel), encoder.encode(rel, spec.ambiguity, spec.noise_sigma, noise_rng)});
  }
  return sc;
}

std::pair<MotionState, MotionState> bimodal_modes() {
  MotionState a{Vec3(0.1, 0.3, 0.0), Vec3(0.6, 0.3, 0.2)};
  MotionState b{Vec3(-0.1, -0.3, 0.0), Vec3(0.6, -0.3, -0.2)};
  return {a, b};
}

std::vector<TrainingPair> make_bimodal_dataset(int n, const ConditionEncoder& encoder, Rng& rng) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("make_bimodal_dataset: n must be even and >= 2");
  const auto [a, b] = bimodal_modes();
  const MotionState mid = MotionState::from_vector(0.5 * (a.vector() + b.vector()));
  Rng unused(0);
  const ConditionVector shared = encoder.encode(state_to_pose(mid), 0.0, 0.0, unused);
  std::bernoulli_distribution coin(0.5);
  std::vector<TrainingPair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back({coin(rng) ? a : b, shared});
  return out;
}

}  // namespace fmvo
