#include <benchmark/benchmark.h>

#include "frugal/encoder.hpp"
#include "frugal/random.hpp"

namespace {

frugal::EncoderConfig base_config(int layers, int hidden) {
  frugal::EncoderConfig cfg;
  cfg.num_layers = layers;
  cfg.num_heads = 4;
  cfg.hidden_dim = hidden;
  cfg.ffn_dim = 4 * hidden;
  cfg.vocab_size = 512;
  cfg.max_positions = 512;
  cfg.num_classes = 2;
  return cfg;
}

std::vector<std::int32_t> ids_for(std::size_t n) {
  frugal::SplitMix64 rng(3);
  std::vector<std::int32_t> ids(n);
  for (auto& id : ids) id = static_cast<std::int32_t>(rng.below(512));
  return ids;
}

void BM_Forward(benchmark::State& state) {
  const auto bundle = frugal::random_bundle(base_config(static_cast<int>(state.range(1)), 64), 1);
  const auto ids = ids_for(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(frugal::forward(bundle, ids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->ArgsProduct({{16, 64, 256}, {2, 6}});

}  // namespace
