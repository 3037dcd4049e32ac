#include <benchmark/benchmark.h>

#include "fsmcmc/coupling.hpp"
#include "fsmcmc/diagnostics.hpp"

using namespace fsmcmc;

namespace {
MHKernel make(ProposalKind kind, double delta, std::size_t m, TargetDensity target) {
  return MHKernel(kind, delta, std::move(target), GaussianMeasure(Spectrum::power_law(1.0, m)));
}

void chain_steps(benchmark::State& state, ProposalKind kind, double delta, TargetDensity target) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const MHKernel k = make(kind, delta, m, std::move(target));
  RngStream rng(1);
  const std::size_t n = 1000;
  StateVector last = k.measure().sample(rng);
  for (auto _ : state) {
    simulate(k, last, n, rng, [&](std::size_t, const StateVector& x, bool) { benchmark::DoNotOptimize(x.data()); });
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
}  // namespace

static void BM_PcnStep(benchmark::State& state) { chain_steps(state, ProposalKind::pcn, 0.18, zero_target()); }
BENCHMARK(BM_PcnStep)->RangeMultiplier(8)->Range(8, 4096);

static void BM_PcnStepTilt(benchmark::State& state) { chain_steps(state, ProposalKind::pcn, 0.18, norm_tilt(0.5)); }
BENCHMARK(BM_PcnStepTilt)->RangeMultiplier(8)->Range(8, 4096);

static void BM_RwmStep(benchmark::State& state) { chain_steps(state, ProposalKind::rwm, 0.1, zero_target()); }
BENCHMARK(BM_RwmStep)->RangeMultiplier(8)->Range(8, 4096);

static void BM_CoupledStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const MHKernel k = make(ProposalKind::pcn, 0.18, m, norm_tilt(0.05));
  RngStream rng(2);
  CoupledPair pair{k.measure().sample(rng), k.measure().sample(rng)};
  for (auto _ : state) {
    CoupledStep s = coupled_step(k, pair, rng);
    benchmark::DoNotOptimize(s.pair.x.data());
    pair = std::move(s.pair);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CoupledStep)->RangeMultiplier(8)->Range(8, 4096);

static void BM_Iact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MHKernel k = make(ProposalKind::pcn, 0.18, 1, zero_target());
  RngStream rng(3);
  std::vector<double> series;
  series.reserve(n);
  simulate(k, k.measure().sample(rng), n, rng, [&](std::size_t, const StateVector& x, bool) { series.push_back(x[0]); });
  for (auto _ : state) benchmark::DoNotOptimize(iact_and_variance(series));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Iact)->RangeMultiplier(10)->Range(10000, 1000000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
