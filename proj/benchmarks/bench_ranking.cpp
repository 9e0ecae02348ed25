#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "cosal/pipeline.hpp"
#include "cosal/ranking.hpp"

namespace {

cosal::ScalarMap blob(std::size_t side) {
  std::vector<double> v(side * side);
  const double c = static_cast<double>(side) / 3.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t k = 0; k < side; ++k) {
      const double dr = static_cast<double>(r) - c, dk = static_cast<double>(k) - c;
      v[r * side + k] = std::exp(-(dr * dr + dk * dk) / (2.0 * c * c / 4.0));
    }
  }
  return cosal::ScalarMap(side, side, std::move(v));
}

void BM_BuildGraph(benchmark::State& state) {
  const auto map = blob(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cosal::ranking::build_ranking_graph(map));
}
BENCHMARK(BM_BuildGraph)->Arg(32)->Arg(64);

void BM_ManifoldRank(benchmark::State& state) {
  const auto graph = cosal::ranking::build_ranking_graph(blob(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(cosal::ranking::manifold_rank(graph));
}
BENCHMARK(BM_ManifoldRank)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Refine(benchmark::State& state) {
  const auto map = blob(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cosal::pipeline::refine_attention(map));
}
BENCHMARK(BM_Refine)->Arg(28)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
