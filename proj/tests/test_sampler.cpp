#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fmvo/errors.hpp"
#include "fmvo/sampler.hpp"

using namespace fmvo;

namespace {

const SolverMethod kAll[] = {SolverMethod::kEuler, SolverMethod::kMidpoint, SolverMethod::kRk4};

VectorFieldNet random_net(std::uint64_t seed, int k = 4) {
  Rng rng(seed);
  NetConfig c;
  c.cond_dim = k;
  VectorFieldNet net = init_params(rng, c);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Eigen::VectorXd p(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(rng);
  net.set_flat_parameters(p);
  return net;
}

ConditionVector cond4(double a, double b, double c, double d) {
  ConditionVector v;
  v.values = Eigen::Vector4d(a, b, c, d);
  return v;
}

double linear_error(SolverMethod m, int steps) {
  const BatchField f = [](const Eigen::MatrixXd& x, double) { return x; };
  const Eigen::MatrixXd out = integrate(f, Eigen::MatrixXd::Constant(1, 1, 1.0), {m, steps});
  return std::abs(out(0, 0) - std::exp(1.0));
}

// Least-squares slope of log(error) against log(h).
double convergence_slope(const std::function<double(int)>& err, std::initializer_list<int> steps) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (int s : steps) {
    const double x = std::log(1.0 / s), y = std::log(err(s));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(Integrate, ConstantFieldExactForAllMethods) {
  const Eigen::VectorXd v = (Eigen::VectorXd(6) << 0.3, -1.2, 0.7, 2.5, -0.01, 4.0).finished();
  const BatchField f = [&](const Eigen::MatrixXd& x, double) { return v.replicate(1, x.cols()); };
  Eigen::MatrixXd x0(6, 2);
  x0.col(0) << 1, 2, 3, 4, 5, 6;
  x0.col(1) << -0.5, 0, 0.25, 10, -3, 1e-3;
  for (SolverMethod m : kAll) {
    for (int steps = 1; steps <= 20; ++steps) {
      const Eigen::MatrixXd out = integrate(f, x0, {m, steps});
      const Eigen::MatrixXd expect = x0.colwise() + v;
      EXPECT_LT((out - expect).cwiseAbs().maxCoeff(), 1e-14) << to_string(m) << " " << steps;
    }
  }
}

TEST(Integrate, MidpointFiveStepsOnExponential) {
  const double h = 0.2;
  const double closed = std::pow(1.0 + h + h * h / 2.0, 5);
  const BatchField f = [](const Eigen::MatrixXd& x, double) { return x; };
  const double got = integrate(f, Eigen::MatrixXd::Constant(1, 1, 1.0), {SolverMethod::kMidpoint, 5})(0, 0);
  EXPECT_NEAR(got, closed, 1e-14);
  EXPECT_LT(std::abs(got - std::exp(1.0)) / std::exp(1.0), 6e-3);
  const double ratio = linear_error(SolverMethod::kMidpoint, 5) / linear_error(SolverMethod::kMidpoint, 10);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(Integrate, ConvergenceOrdersOnLinearField) {
  const std::initializer_list<int> steps{4, 8, 16, 32, 64};
  EXPECT_NEAR(convergence_slope([](int s) { return linear_error(SolverMethod::kEuler, s); }, steps), 1.0, 0.3);
  EXPECT_NEAR(convergence_slope([](int s) { return linear_error(SolverMethod::kMidpoint, s); }, steps), 2.0, 0.3);
  EXPECT_NEAR(convergence_slope([](int s) { return linear_error(SolverMethod::kRk4, s); }, {4, 8, 16, 32}), 4.0,
              0.3);
}

TEST(Integrate, TimeDependentFieldKeepsOrder) {
  // dx/dt = cos(t) x  =>  x(1) = x0 exp(sin 1); wrong stage times drop the order.
  const BatchField f = [](const Eigen::MatrixXd& x, double t) { return Eigen::MatrixXd(std::cos(t) * x); };
  const auto err = [&](SolverMethod m, int s) {
    return std::abs(integrate(f, Eigen::MatrixXd::Constant(1, 1, 1.0), {m, s})(0, 0) - std::exp(std::sin(1.0)));
  };
  EXPECT_NEAR(convergence_slope([&](int s) { return err(SolverMethod::kMidpoint, s); }, {4, 8, 16, 32}), 2.0, 0.3);
  EXPECT_NEAR(convergence_slope([&](int s) { return err(SolverMethod::kRk4, s); }, {4, 8, 16, 32}), 4.0, 0.3);
}

TEST(Integrate, StageTimesAreExact) {
  std::vector<double> seen;
  const BatchField f = [&](const Eigen::MatrixXd& x, double t) {
    seen.push_back(t);
    return Eigen::MatrixXd::Zero(x.rows(), x.cols());
  };
  integrate(f, Eigen::MatrixXd::Zero(1, 1), {SolverMethod::kMidpoint, 2});
  EXPECT_EQ(seen, (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
  seen.clear();
  integrate(f, Eigen::MatrixXd::Zero(1, 1), {SolverMethod::kRk4, 1});
  EXPECT_EQ(seen, (std::vector<double>{0.0, 0.5, 0.5, 1.0}));
}

TEST(Integrate, NonFiniteStateNamesStep) {
  const BatchField f = [](const Eigen::MatrixXd& x, double t) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    if (t >= 0.5) v(0, 1) = std::numeric_limits<double>::infinity();
    return v;
  };
  try {
    integrate(f, Eigen::MatrixXd::Zero(2, 2), {SolverMethod::kEuler, 4});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(integrate(f, Eigen::MatrixXd::Zero(2, 2), {SolverMethod::kEuler, 0}), ConfigError);
}

TEST(Integrate, SingleEulerStepOnNet) {
  const VectorFieldNet net = random_net(1);
  const ConditionVector c = cond4(0.1, -0.4, 0.9, 0.0);
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const MotionState x0 = sample_initial(rng);
    const MotionState out = integrate(net, x0, c, {SolverMethod::kEuler, 1});
    EXPECT_LT((out.vector() - (x0.vector() + forward(net, x0, 0.0, c))).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Integrate, MidpointMatchesNaiveLoop) {
  const VectorFieldNet net = random_net(3);
  const ConditionVector c = cond4(0.5, 0.5, -0.2, 0.3);
  Rng rng(4);
  const MotionState x0 = sample_initial(rng);
  Vec6 x = x0.vector();
  const double h = 0.2;
  for (int i = 0; i < 5; ++i) {
    const double t = i * h;
    const Vec6 k1 = forward(net, MotionState::from_vector(x), t, c);
    x += h * forward(net, MotionState::from_vector(x + 0.5 * h * k1), t + 0.5 * h, c);
  }
  EXPECT_LT((integrate(net, x0, c, {}).vector() - x).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SolverMethod, NamesRoundTrip) {
  for (SolverMethod m : kAll) EXPECT_EQ(parse_solver_method(to_string(m)), m);
  EXPECT_FALSE(parse_solver_method("heun").has_value());
  const SolverConfig d;
  EXPECT_EQ(d.method, SolverMethod::kMidpoint);
  EXPECT_EQ(d.steps, 5);
}

TEST(EstimatePose, SingleSampleHasZeroStd) {
  const VectorFieldNet net = random_net(5);
  Rng rng(6);
  const PoseSampleSet s = estimate_pose(net, cond4(1, 0, 0, 0), {}, 1, rng);
  ASSERT_EQ(s.samples.size(), 1u);
  EXPECT_EQ(s.std_state, Vec6::Zero());
  EXPECT_LT((s.mean_state.vector() - pose_to_state(s.samples[0]).vector()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EstimatePose, MeanAndStdMatchSamples) {
  const VectorFieldNet net = random_net(7);
  Rng rng(8);
  const PoseSampleSet s = estimate_pose(net, cond4(0, 1, 0, 0), {}, 10, rng);
  ASSERT_EQ(s.samples.size(), 10u);
  Vec6 mean = Vec6::Zero();
  for (const RelativePose& p : s.samples) mean += pose_to_state(p).vector();
  mean /= 10.0;
  Vec6 var = Vec6::Zero();
  for (const RelativePose& p : s.samples) var += (pose_to_state(p).vector() - mean).cwiseAbs2();
  EXPECT_LT((s.mean_state.vector() - mean).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((s.std_state - (var / 10.0).cwiseSqrt()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE((s.std_state.array() >= 0.0).all());
}

TEST(EstimatePose, SamplesFollowDrawOrder) {
  const VectorFieldNet net = random_net(9);
  const ConditionVector c = cond4(0, 0, 1, 0);
  Rng a(10), b(10);
  const PoseSampleSet s = estimate_pose(net, c, {}, 4, a);
  for (int i = 0; i < 4; ++i) {
    const MotionState one = integrate(net, sample_initial(b), c, {});
    EXPECT_LT((pose_to_state(s.samples[static_cast<std::size_t>(i)]).vector() - pose_to_state(state_to_pose(one)).vector())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9);
  }
}

TEST(EstimatePose, Errors) {
  VectorFieldNet net = random_net(11);
  Rng rng(12);
  EXPECT_THROW(estimate_pose(net, cond4(0, 0, 0, 0), {}, 0, rng), InvalidArgument);
  net.head_trans.back().bias(1) = std::numeric_limits<double>::quiet_NaN();
  try {
    estimate_pose(net, cond4(0, 0, 0, 0), {}, 3, rng);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("sample 0"), std::string::npos) << e.what();
  }
}

TEST(EstimateSequence, EmptyAndSingleton) {
  const VectorFieldNet net = random_net(13);
  EXPECT_TRUE(estimate_sequence(net, std::vector<ConditionVector>{}, {}, 10, 1).empty());
  const std::vector<ConditionVector> one{cond4(0.2, 0.1, 0, -1)};
  const auto seq = estimate_sequence(net, one, {}, 10, 99);
  Rng rng(derive_seed(99, SeedStream::kInfer, 0));
  const PoseSampleSet direct = estimate_pose(net, one[0], {}, 10, rng);
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq[0].mean_state.vector(), direct.mean_state.vector());
  EXPECT_EQ(seq[0].std_state, direct.std_state);
}

TEST(EstimateSequence, HundredPairsKeepOrderAndInvariants) {
  const VectorFieldNet net = random_net(14);
  std::vector<ConditionVector> conds;
  for (int i = 0; i < 100; ++i) conds.push_back(cond4(std::sin(i), std::cos(i), 0.01 * i, 1.0));
  const auto seq = estimate_sequence(net, conds, {}, 10, 5);
  ASSERT_EQ(seq.size(), 100u);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(seq[i].samples.size(), 10u);
    EXPECT_TRUE((seq[i].std_state.array() >= 0.0).all());
    EXPECT_TRUE(seq[i].mean_state.vector().allFinite());
  }
  // pair 37 on its own
  Rng rng(derive_seed(5, SeedStream::kInfer, 37));
  EXPECT_EQ(estimate_pose(net, conds[37], {}, 10, rng).mean_state.vector(), seq[37].mean_state.vector());
  const auto again = estimate_sequence(net, conds, {}, 10, 5);
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(again[i].mean_state.vector(), seq[i].mean_state.vector());
}
