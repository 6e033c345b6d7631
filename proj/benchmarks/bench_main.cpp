#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mlbn/gmm.hpp"
#include "mlbn/presets.hpp"
#include "mlbn/qp.hpp"
#include "mlbn/simulate.hpp"
#include "mlbn/tropical.hpp"

using namespace mlbn;

namespace {

WeightedDag random_dag(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(-2.0, 3.0);
  std::bernoulli_distribution keep(0.3);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (keep(rng)) edges.push_back({i, j, w(rng)});
  return WeightedDag(n, edges);
}

void BM_KleeneStar(benchmark::State& state) {
  const auto m = random_dag(static_cast<std::size_t>(state.range(0)), 1).weight_matrix();
  for (auto _ : state) benchmark::DoNotOptimize(tropical::kleene_star(m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KleeneStar)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNCubed);

void BM_Simulate(benchmark::State& state) {
  const auto dag = presets::ten_node();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(dag, {}, NoiseSpec::uniform(10, 0.1), n, 7, {.workers = 1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_SolvePair1d(benchmark::State& state) {
  const auto s = simulate(presets::gmm_example(), {}, NoiseSpec::uniform(4, 0.1), static_cast<std::size_t>(state.range(0)), 3);
  const auto y = differences(s, 1, 3).values;
  for (auto _ : state) benchmark::DoNotOptimize(qp::solve_pair_1d(y, 1e-3, 1 - 1e-3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolvePair1d)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNLogN);

void BM_SolveQpGeneric(benchmark::State& state) {
  const auto s = simulate(presets::gmm_example(), {}, NoiseSpec::uniform(4, 0.1), static_cast<std::size_t>(state.range(0)), 3);
  auto y = differences(s, 1, 3).values;
  const auto one = qp::solve_pair_1d(y, 0.2, 0.8);
  for (double& v : y) v -= one.shift;
  const auto inst = qp::pair_instance(y, 0.2, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(qp::solve_qp_generic(inst));
}
BENCHMARK(BM_SolveQpGeneric)->Arg(20)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_EmFit(benchmark::State& state) {
  const auto s = simulate(presets::gmm_example(), {}, NoiseSpec::uniform(4, 0.1), static_cast<std::size_t>(state.range(0)), 5);
  const auto y = differences(s, 1, 3).values;
  for (auto _ : state) benchmark::DoNotOptimize(gmm::em_fit(y, 2, 11, 4));
}
BENCHMARK(BM_EmFit)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_SelectK(benchmark::State& state) {
  const auto s = simulate(presets::gmm_example(), {}, NoiseSpec::uniform(4, 0.1), 2000, 5);
  const auto y = differences(s, 1, 3).values;
  for (auto _ : state) benchmark::DoNotOptimize(gmm::select_k(y, static_cast<std::size_t>(state.range(0)), 11));
}
BENCHMARK(BM_SelectK)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
