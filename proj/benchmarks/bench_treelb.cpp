#include <benchmark/benchmark.h>

#include <cmath>

#include "treelb/codes.hpp"
#include "treelb/distributions.hpp"
#include "treelb/impurity.hpp"
#include "treelb/learner.hpp"
#include "treelb/random.hpp"
#include "treelb/targets.hpp"

using namespace treelb;

namespace {

std::vector<double> biases(std::size_t n, double delta, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p(n);
  for (auto& v : p) v = rng.uniform(delta, 1.0 - delta);
  return p;
}

std::size_t c_for(double delta) { return static_cast<std::size_t>(std::ceil(std::log(5.0) / delta)); }

}  // namespace

// E[f] and every single-coordinate conditional on f_{c,k}.
void BM_SplitMeansDisjoint(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const TargetFunction f(DisjointParityAddressing(c_for(0.25), k));
  const auto p = biases(f.arity(), 0.25, 1);
  for (auto _ : state) benchmark::DoNotOptimize(split_means(f, p));
  state.counters["vars"] = static_cast<double>(f.arity());
}
BENCHMARK(BM_SplitMeansDisjoint)->DenseRange(4, 8, 2);

void BM_SplitMeansCoded(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto code = gv_search_autoscale(k, required_distance(k, 0.25), 1, 100000);
  const TargetFunction f{CodedAddressing(code->family)};
  const auto p = biases(f.arity(), 0.25, 2);
  for (auto _ : state) benchmark::DoNotOptimize(split_means(f, p));
  state.counters["vars"] = static_cast<double>(f.arity());
}
BENCHMARK(BM_SplitMeansCoded)->DenseRange(4, 8, 2);

// Address law through the disjoint-block product route versus the character
// sum over the same layout expressed as a set family.
void BM_PmfProduct(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const TargetFunction f(DisjointParityAddressing(c_for(0.25), k));
  const auto p = biases(f.arity(), 0.25, 3);
  for (auto _ : state) benchmark::DoNotOptimize(address_pmf(f, p));
}
BENCHMARK(BM_PmfProduct)->DenseRange(4, 12, 4);

void BM_PmfTransform(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t c = c_for(0.25);
  const TargetFunction f{CodedAddressing(SetFamily::disjoint_blocks(k, c * k))};
  const auto p = biases(f.arity(), 0.25, 3);
  for (auto _ : state) benchmark::DoNotOptimize(address_pmf(f, p));
}
BENCHMARK(BM_PmfTransform)->DenseRange(4, 12, 4);

// Exact build along 200 sampled paths with depth budget min(2^k, 64).
void BM_BuildSampledPaths(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const TargetFunction f(DisjointParityAddressing(c_for(0.25), k));
  const ProductDistribution d(biases(f.arity(), 0.25, 4), 0.25);
  GrowthPolicy policy;
  policy.depth_budget = std::min<std::size_t>(std::size_t{1} << k, 64);
  policy.expansion = Expansion::sampled_paths;
  policy.path_count = 200;
  policy.record_gains = false;
  const auto g = gini_impurity();
  for (auto _ : state) benchmark::DoNotOptimize(build_tree_exact(f, d, g, policy));
}
BENCHMARK(BM_BuildSampledPaths)->DenseRange(4, 6, 1)->Unit(benchmark::kMillisecond);

// Learner on examples: split statistics from m draws.
void BM_BuildFromSamples(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const TargetFunction f(DisjointParityAddressing(c_for(0.25), 4));
  const ProductDistribution d(biases(f.arity(), 0.25, 5), 0.25);
  GrowthPolicy policy;
  policy.depth_budget = 3;
  policy.record_gains = false;
  const auto g = gini_impurity();
  for (auto _ : state) benchmark::DoNotOptimize(build_tree_sampled(f, d, g, policy, m, 7));
}
BENCHMARK(BM_BuildFromSamples)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
