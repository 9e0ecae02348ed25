#include <benchmark/benchmark.h>

#include <random>

#include "cosal/coattention.hpp"

namespace {

cosal::coattention::GroupFeatureSet random_group(std::size_t images, std::size_t side, std::size_t k) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cosal::coattention::GroupMember> members;
  for (std::size_t n = 0; n < images; ++n) {
    std::vector<double> v(side * side * k);
    for (double& x : v) x = normal(rng);
    members.push_back({"m" + std::to_string(n), cosal::FeatureStack(side, side, k, std::move(v))});
  }
  return cosal::coattention::GroupFeatureSet(std::move(members));
}

void BM_Covariance(benchmark::State& state) {
  const auto group = random_group(10, 14, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cosal::coattention::group_covariance(group));
}
BENCHMARK(BM_Covariance)->Arg(64)->Arg(512);

void BM_CoattentionMaps(benchmark::State& state) {
  const auto group = random_group(10, 14, static_cast<std::size_t>(state.range(0)));
  cosal::coattention::CoattentionOptions opts;
  opts.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(cosal::coattention::coattention_maps(group, opts));
}
BENCHMARK(BM_CoattentionMaps)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
