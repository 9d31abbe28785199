#include <benchmark/benchmark.h>

#include <string>

#include "frugal/metrics.hpp"
#include "frugal/random.hpp"

namespace {

std::string sentence(frugal::SplitMix64& rng, std::size_t n) {
  static const char* words[] = {"the", "council", "approved", "a", "budget", "for", "schools", "and", "roads", "."};
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += words[rng.below(10)];
  }
  return s;
}

void BM_Bleu(benchmark::State& state) {
  frugal::SplitMix64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto hyp = sentence(rng, n), ref = sentence(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(frugal::bleu(hyp, ref));
}
BENCHMARK(BM_Bleu)->Arg(20)->Arg(200);

void BM_Rouge(benchmark::State& state) {
  frugal::SplitMix64 rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto hyp = sentence(rng, n), ref = sentence(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(frugal::rouge(hyp, ref));
}
BENCHMARK(BM_Rouge)->Arg(20)->Arg(200);

void BM_Meteor(benchmark::State& state) {
  frugal::SplitMix64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto hyp = sentence(rng, n), ref = sentence(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(frugal::meteor(hyp, ref));
}
BENCHMARK(BM_Meteor)->Arg(20)->Arg(200);

}  // namespace
