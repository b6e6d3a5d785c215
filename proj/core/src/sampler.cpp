#include "fmvo/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "fmvo/errors.hpp"

namespace fmvo {

std::string_view to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::kEuler:
      return "euler";
    case SolverMethod::kMidpoint:
      return "midpoint";
    case SolverMethod::kRk4:
      return "rk4";
  }
  return "unknown";
}

std::optional<SolverMethod> parse_solver_method(std::string_view s) {
  if (s == "euler") return SolverMethod::kEuler;
  if (s == "midpoint") return SolverMethod::kMidpoint;
  if (s == "rk4") return SolverMethod::kRk4;
  return std::nullopt;
}

Eigen::MatrixXd integrate(const BatchField& field, Eigen::MatrixXd x, const SolverConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("solver needs at least one step");
  if (!x.allFinite()) throw NumericalError("integrate: non-finite initial state");
  const double h = 1.0 / cfg.steps;
  for (int i = 0; i < cfg.steps; ++i) {
    // Last step lands exactly on tau = 1.
    const double tau = static_cast<double>(i) / cfg.steps;
    switch (cfg.method) {
      case SolverMethod::kEuler:
        x += h * field(x, tau);
        break;
      case SolverMethod::kMidpoint: {
        const Eigen::MatrixXd k1 = field(x, tau);
        x += h * field(x + 0.5 * h * k1, tau + 0.5 * h);
        break;
      }
      case SolverMethod::kRk4: {
        const double t_end = static_cast<double>(i + 1) / cfg.steps;
        const Eigen::MatrixXd k1 = field(x, tau);
        const Eigen::MatrixXd k2 = field(x + 0.5 * h * k1, tau + 0.5 * h);
        const Eigen::MatrixXd k3 = field(x + 0.5 * h * k2, tau + 0.5 * h);
        const Eigen::MatrixXd k4 = field(x + h * k3, t_end);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        break;
      }
    }
    if (!x.allFinite()) throw NumericalError("integrate: non-finite state at step " + std::to_string(i));
  }
  return x;
}

namespace {

BatchField net_field(const VectorFieldNet& net, const ConditionVector& cond, Eigen::Index batch) {
  if (cond.dim() != net.config.cond_dim) throw ConfigError("condition dimension does not match network");
  Eigen::MatrixXd conds = cond.values.replicate(1, batch);
  return [&net, conds = std::move(conds)](const Eigen::MatrixXd& states, double tau) {
    // Guard tau against rounding just past 1 in the midpoint/rk4 stages.
    const Eigen::VectorXd taus = Eigen::VectorXd::Constant(states.cols(), std::min(tau, 1.0));
    return forward_batch(net, states, taus, conds);
  };
}

}  // namespace

MotionState integrate(const VectorFieldNet& net, const MotionState& x0, const ConditionVector& cond,
                      const SolverConfig& cfg) {
  const Eigen::MatrixXd out = integrate(net_field(net, cond, 1), x0.vector(), cfg);
  return MotionState::from_vector(out.col(0));
}

void summarize_samples(PoseSampleSet& set) {
  if (set.samples.empty()) throw InvalidArgument("summarize_samples: no samples");
  const auto m = static_cast<double>(set.samples.size());
  Vec6 sum = Vec6::Zero();
  std::vector<Vec6> states;
  states.reserve(set.samples.size());
  for (const RelativePose& p : set.samples) {
    states.push_back(pose_to_state(p).vector());
    sum += states.back();
  }
  const Vec6 mean = sum / m;
  Vec6 var = Vec6::Zero();
  for (const Vec6& s : states) var += (s - mean).cwiseAbs2();
  set.mean_state = MotionState::from_vector(mean);
  set.std_state = (var / m).cwiseSqrt();
}

PoseSampleSet estimate_pose(const VectorFieldNet& net, const ConditionVector& cond, const SolverConfig& cfg, int m,
                            Rng& rng) {
  if (m < 1) throw InvalidArgument("estimate_pose: m must be >= 1");
  Eigen::MatrixXd x0(6, m);
  for (int i = 0; i < m; ++i) x0.col(i) = sample_initial(rng).vector();

  Eigen::MatrixXd x1;
  try {
    x1 = integrate(net_field(net, cond, m), x0, cfg);
  } catch (const NumericalError&) {
    // Locate the offending sample by re-running columns one at a time.
    for (int i = 0; i < m; ++i) {
      try {
        integrate(net_field(net, cond, 1), Eigen::MatrixXd(x0.col(i)), cfg);
      } catch (const NumericalError& inner) {
        throw NumericalError("sample " + std::to_string(i) + ": " + inner.what());
      }
    }
    throw;
  }

  PoseSampleSet set;
  set.samples.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) set.samples.push_back(state_to_pose(MotionState::from_vector(x1.col(i))));
  summarize_samples(set);
  return set;
}

std::vector<PoseSampleSet> estimate_sequence(const VectorFieldNet& net, std::span<const ConditionVector> conds,
                                             const SolverConfig& cfg, int m, std::uint64_t seed) {
  std::vector<PoseSampleSet> out(conds.size());
  std::string failures;
  for (std::size_t i = 0; i < conds.size(); ++i) {
    Rng rng(derive_seed(seed, SeedStream::kInfer, i));
    try {
      out[i] = estimate_pose(net, conds[i], cfg, m, rng);
    } catch (const NumericalError& e) {
      failures += "\n  pair " + std::to_string(i) + ": " + e.what();
    }
  }
  if (!failures.empty()) throw NumericalError("estimate_sequence failed for:" + failures);
  return out;
}

}  // namespace fmvo
