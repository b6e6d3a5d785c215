// ATE of the composed figure8 estimate as a function of integration steps.
// The model is trained once on first use; counters carry the ATE.

#include <benchmark/benchmark.h>

#include "fmvo/flowmatch.hpp"
#include "fmvo/sampler.hpp"
#include "fmvo/synthworld.hpp"
#include "fmvo/trajeval.hpp"

using namespace fmvo;

namespace {

struct Setup {
  Scenario scenario;
  VectorFieldNet net;
};

const Setup& setup() {
  static const Setup s = [] {
    ScenarioSpec spec;
    spec.name = "figure8";
    spec.kind = TrajectoryKind::kFigure8;
    spec.n = 201;
    spec.seed = 7;
    Setup out{make_scenario(spec), {}};
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.steps_per_epoch = 100;
    cfg.lr_decay_epoch = 25;
    cfg.seed = 7;
    out.net = train(out.scenario.pairs, cfg, NetConfig{}).net;
    return out;
  }();
  return s;
}

void BM_AblateSteps(benchmark::State& state) {
  const Setup& s = setup();
  const auto conds = s.scenario.conditions();
  const auto gt_rels = s.scenario.gt_relative();
  const SolverConfig cfg{static_cast<SolverMethod>(state.range(0)), static_cast<int>(state.range(1))};
  double ate_rmse = 0.0;
  for (auto _ : state) {
    const auto sets = estimate_sequence(s.net, conds, cfg, 10, 7);
    std::vector<RelativePose> est;
    for (const auto& set : sets) est.push_back(set.estimate());
    const auto aligned = scale_align(est, gt_rels, ScaleMode::kPerPair);
    ate_rmse = ate(compose_trajectory(RelativePose::identity(), aligned),
                   compose_trajectory(RelativePose::identity(), gt_rels), AlignMode::kSim3);
  }
  state.counters["ate"] = ate_rmse;
  state.SetLabel(std::string(to_string(cfg.method)));
}
BENCHMARK(BM_AblateSteps)
    ->ArgsProduct({{0, 1, 2}, {2, 5, 10}})
    ->Unit(benchmark::kMillisecond)
    ->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
