// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "inrrom/trainer.hpp"

using namespace inrrom;

namespace {

GridSpec square_grid(std::size_t n) {
  GridSpec g;
  g.nx = n;
  g.ny = n;
  return g;
}

ModelConfig scaled_model(ModelKind kind) {
  ModelConfig m;
  m.kind = kind;
  m.latent_per_component = 16;
  m.ode_width = 64;
  m.rank = 16;
  m.decoder_width = 64;
  return m;
}

const Dataset& bench_dataset() {
  static const Dataset d = [] {
    FomConfig f;
    f.grid = square_grid(32);
    f.snapshot_stride = 40;
    return generate_dataset(f, {100.0}, 1);
  }();
  return d;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor a({n, n}), b({n, n});
  for (auto& x : a.values()) x = u(rng);
  for (auto& x : b.values()) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * std::int64_t(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

static void BM_BackwardEulerStep(benchmark::State& state) {
  FomConfig f;
  f.grid = square_grid(std::size_t(state.range(0)));
  const FieldState u0 = initial_condition(f.grid);
  for (auto _ : state) benchmark::DoNotOptimize(backward_euler_step(u0, f));
}
BENCHMARK(BM_BackwardEulerStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_RomPredict(benchmark::State& state) {
  const auto kind = ModelKind(state.range(0));
  const Dataset& d = bench_dataset();
  RomModel model(scaled_model(kind), 0, MuEncoding::fit({100.0}), {100.0});
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(100.0, d.times, d.grid));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_RomPredict)
    ->Arg(int(ModelKind::NODE))
    ->Arg(int(ModelKind::PNODE))
    ->Arg(int(ModelKind::HyperPNODE))
    ->Unit(benchmark::kMillisecond);

static void BM_TrainEpoch(benchmark::State& state) {
  const bool pi = state.range(0) != 0;
  TrainConfig t;
  t.physics_informed = pi;
  Checkpoint c = initialize(scaled_model(ModelKind::HyperPNODE), t, {100.0});
  for (auto _ : state) train(c, bench_dataset(), 1);
  state.SetLabel(pi ? "HyperPNODE+PI" : "HyperPNODE");
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
