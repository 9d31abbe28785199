#include <benchmark/benchmark.h>

#include <vector>

#include "frugal/compression.hpp"
#include "frugal/random.hpp"

namespace {

std::vector<double> scores(std::size_t m) {
  frugal::SplitMix64 rng(9);
  std::vector<double> s(m);
  for (auto& x : s) x = rng.uniform();
  return s;
}

void BM_TopK(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto s = scores(m);
  for (auto _ : state) benchmark::DoNotOptimize(frugal::select_top_k(frugal::rank(s), 50, m));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TopK)->Range(64, 1 << 16);

void BM_RandomK(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(frugal::select_random_k(m, 50, seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RandomK)->Range(64, 1 << 16);

}  // namespace
