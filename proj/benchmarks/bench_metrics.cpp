#include <benchmark/benchmark.h>

#include <random>

#include "cosal/metrics.hpp"

namespace {

cosal::ScalarMap random_map(std::mt19937_64& rng, std::size_t side) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(side * side);
  for (double& x : v) x = u(rng);
  return cosal::ScalarMap(side, side, std::move(v));
}

cosal::LabelMask disc(std::size_t side) {
  cosal::Grid<cosal::LabelMask::Label> g(side, side);
  const double c = static_cast<double>(side) / 2.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t k = 0; k < side; ++k) {
      const double dr = static_cast<double>(r) - c, dk = static_cast<double>(k) - c;
      g(r, k) = dr * dr + dk * dk < c * c / 4.0 ? 1 : 0;
    }
  }
  return cosal::LabelMask(g);
}

void BM_EvaluatePair(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto pred = random_map(rng, side);
  const auto gt = disc(side);
  for (auto _ : state) benchmark::DoNotOptimize(cosal::metrics::evaluate_pair(pred, gt));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(side * side));
}
BENCHMARK(BM_EvaluatePair)->Arg(64)->Arg(256)->Arg(512);

void BM_SMeasure(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto pred = random_map(rng, side);
  const auto gt = disc(side);
  for (auto _ : state) benchmark::DoNotOptimize(cosal::metrics::s_measure(pred, gt));
}
BENCHMARK(BM_SMeasure)->Arg(256);

}  // namespace
