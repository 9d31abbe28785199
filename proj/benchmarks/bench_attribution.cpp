#include <benchmark/benchmark.h>

#include "frugal/attribution.hpp"
#include "frugal/encoder.hpp"
#include "frugal/random.hpp"

namespace {

struct Fixture {
  frugal::EncoderBundle bundle;
  frugal::ForwardTrace trace;
};

Fixture make(std::size_t n) {
  frugal::EncoderConfig cfg;
  cfg.num_layers = 4;
  cfg.num_heads = 4;
  cfg.hidden_dim = 64;
  cfg.ffn_dim = 256;
  cfg.vocab_size = 512;
  cfg.max_positions = 512;
  cfg.num_classes = 2;
  auto bundle = frugal::random_bundle(cfg, 11);
  frugal::SplitMix64 rng(5);
  std::vector<std::int32_t> ids(n);
  for (auto& id : ids) id = static_cast<std::int32_t>(rng.below(512));
  auto trace = frugal::forward(bundle, ids);
  return {std::move(bundle), std::move(trace)};
}

void BM_Rollout(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(frugal::attention_rollout(f.trace));
}
BENCHMARK(BM_Rollout)->Arg(16)->Arg(64)->Arg(256);

void BM_GlobEnc(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(frugal::globenc(f.trace, f.bundle));
}
BENCHMARK(BM_GlobEnc)->Arg(16)->Arg(64)->Arg(256);

// Per-source state is O(n^2 d) per layer.
void BM_DecompX(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(frugal::decompose(f.trace, f.bundle, {}));
}
BENCHMARK(BM_DecompX)->Arg(16)->Arg(64)->Arg(128);

}  // namespace
