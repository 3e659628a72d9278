#include <benchmark/benchmark.h>

#include <random>

#include "logitdyn/features.h"
#include "logitdyn/metrics.h"
#include "logitdyn/probe.h"
#include "logitdyn/splits.h"
#include "logitdyn/synthetic.h"

namespace logitdyn {
namespace {

TrajectoryDataset Data(std::size_t n, std::size_t classes, std::size_t depth) {
  SyntheticConfig sc;
  sc.n_examples = n;
  sc.n_classes = classes;
  sc.depth = depth;
  sc.seed = 1;
  return GenerateSynthetic(sc);
}

void BM_DynamicsFeatures(benchmark::State& state) {
  const auto classes = static_cast<std::size_t>(state.range(0));
  const auto ds = Data(256, classes, 8);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(DynamicsFeatures(ds.trajectory(i++ % ds.size()), 5));
  }
}
BENCHMARK(BM_DynamicsFeatures)->Arg(10)->Arg(100)->Arg(1000);

void BM_BuildFeatures(benchmark::State& state) {
  const auto ds = Data(static_cast<std::size_t>(state.range(0)), 100, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildFeatures(ds, FeatureConfig{12, 5, true}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildFeatures)->Arg(1000)->Arg(10000);

void BM_AveragePrecision(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    y[i] = i % 5 == 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(AveragePrecision(s, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

void BM_TrainProbe(benchmark::State& state) {
  const auto ds = Data(static_cast<std::size_t>(state.range(0)), 20, 8);
  const auto x = BuildFeatures(ds, FeatureConfig{7, 3, true});
  const auto split = StratifiedSplit(x.labels(), 0.5, 3);
  ProbeHyperParams hp;
  hp.epochs = 10;
  for (auto _ : state) benchmark::DoNotOptimize(TrainProbe(x, split, hp));
}
BENCHMARK(BM_TrainProbe)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace logitdyn

BENCHMARK_MAIN();
