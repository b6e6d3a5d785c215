#include <benchmark/benchmark.h>

#include "fmvo/sampler.hpp"
#include "fmvo/se3.hpp"
#include "fmvo/trajeval.hpp"
#include "fmvo/vfnet.hpp"

using namespace fmvo;

namespace {

VectorFieldNet random_net(std::uint64_t seed) {
  Rng rng(seed);
  VectorFieldNet net = init_params(rng, NetConfig{});
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Eigen::VectorXd p(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(rng);
  net.set_flat_parameters(p);
  return net;
}

Eigen::MatrixXd gaussian(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

void BM_ForwardBatch(benchmark::State& state) {
  const VectorFieldNet net = random_net(1);
  Rng rng(2);
  const int b = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian(rng, 6, b), c = gaussian(rng, 16, b);
  const Eigen::VectorXd taus = Eigen::VectorXd::LinSpaced(b, 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, x, taus, c));
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_ForwardBatch)->Arg(1)->Arg(10)->Arg(64);

void BM_ForwardBackwardBatch(benchmark::State& state) {
  const VectorFieldNet net = random_net(3);
  Rng rng(4);
  const int b = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian(rng, 6, b), c = gaussian(rng, 16, b), up = gaussian(rng, 6, b);
  const Eigen::VectorXd taus = Eigen::VectorXd::LinSpaced(b, 0.0, 1.0);
  for (auto _ : state) {
    ForwardCache cache;
    forward_batch(net, x, taus, c, &cache);
    benchmark::DoNotOptimize(backward_batch(net, cache, up));
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_ForwardBackwardBatch)->Arg(64);

// m = 10 samples for one condition; steps swept per method.
void BM_EstimatePose(benchmark::State& state) {
  const VectorFieldNet net = random_net(5);
  Rng crng(6);
  const ConditionVector cond{gaussian(crng, 16, 1).col(0)};
  const SolverConfig cfg{static_cast<SolverMethod>(state.range(0)), static_cast<int>(state.range(1))};
  for (auto _ : state) {
    Rng rng(7);
    benchmark::DoNotOptimize(estimate_pose(net, cond, cfg, 10, rng));
  }
  state.SetLabel(std::string(to_string(cfg.method)));
}
BENCHMARK(BM_EstimatePose)->ArgsProduct({{0, 1, 2}, {2, 5, 10}});

void BM_ExpLog(benchmark::State& state) {
  Rng rng(8);
  const Eigen::MatrixXd rho = gaussian(rng, 3, 1024);
  for (auto _ : state) {
    for (Eigen::Index i = 0; i < rho.cols(); ++i) benchmark::DoNotOptimize(log_map(exp_map(rho.col(i))));
  }
  state.SetItemsProcessed(state.iterations() * rho.cols());
}
BENCHMARK(BM_ExpLog);

void BM_UmeyamaSim3(benchmark::State& state) {
  Rng rng(9);
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd a = gaussian(rng, 3, n), b = gaussian(rng, 3, n);
  Trajectory est, gt;
  for (int i = 0; i < n; ++i) {
    est.stamps.push_back(i);
    gt.stamps.push_back(i);
    est.poses.push_back({Rotation::identity(), a.col(i)});
    gt.poses.push_back({Rotation::identity(), b.col(i)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(umeyama_align(est, gt, true));
}
BENCHMARK(BM_UmeyamaSim3)->Arg(200)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
