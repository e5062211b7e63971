#include <random>

#include <benchmark/benchmark.h>

#include "blockfwer/baselines.hpp"
#include "blockfwer/blockwise.hpp"
#include "blockfwer/k3solver.hpp"
#include "blockfwer/simharness.hpp"

using namespace bfwer;

namespace {

std::vector<double> uniform_p(std::size_t K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> p(K);
  for (auto& v : p) v = U(rng) * U(rng);
  return p;
}

void BM_Solve(benchmark::State& state) {
  const QGrid grid = build_qgrid(static_cast<int>(state.range(0)));
  const K3Problem prob(AltDensity::truncnorm(-2.0), grid);
  for (auto _ : state) benchmark::DoNotOptimize(compute_optimal_mu(0.005, prob));
  state.counters["nodes"] = static_cast<double>(grid.n_grid());
}
BENCHMARK(BM_Solve)->Arg(40)->Arg(70)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const QGrid grid = build_qgrid(70);
  const K3Problem prob(AltDensity::truncnorm(-2.0), grid);
  const MuVector mu{0.0, 40.0, 9.0};
  for (auto _ : state) benchmark::DoNotOptimize(prob.evaluate(mu));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMicrosecond);

void BM_Baseline(benchmark::State& state) {
  const auto m = static_cast<Method>(state.range(0));
  const auto part = BlockPartition::contiguous(30);
  const auto p = uniform_p(30, 5);
  for (auto _ : state) benchmark::DoNotOptimize(run_baseline(m, p, 0.05, &part));
  state.SetLabel(to_string(m));
}
BENCHMARK(BM_Baseline)->DenseRange(0, static_cast<int>(Method::meinshausen))->Unit(benchmark::kMicrosecond);

void BM_BoostApply(benchmark::State& state) {
  const auto part = BlockPartition::contiguous(30);
  const auto p = uniform_p(30, 6);
  const QGrid grid = build_qgrid(40);
  const BoostProcedure proc(part, std::vector<double>(10, 0.005), AltDensity::truncnorm(-2.0), grid);
  for (auto _ : state) benchmark::DoNotOptimize(proc.apply(p));
}
BENCHMARK(BM_BoostApply)->Unit(benchmark::kMicrosecond);

void BM_SimulateReplicates(benchmark::State& state) {
  SimConfig c;
  c.n_rep = static_cast<int>(state.range(0));
  c.seed = 1;
  c.grid.n_per_axis = 40;
  c.methods = {"boost", "bonferroni", "hommel"};
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateReplicates)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
