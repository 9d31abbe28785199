#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "frugal/compression.hpp"
#include "frugal/error.hpp"
#include "frugal/random.hpp"
#include "oracles.hpp"

using namespace frugal;

namespace {

std::vector<std::size_t> iota_vec(std::size_t m) {
  std::vector<std::size_t> v(m);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Model tiny_model(int max_positions = 64) {
  std::vector<std::string> entries{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "the", "movie", "was", "good", ",", "and",
                                   "i", "liked", "it", "very", "much", ".", "un", "##happy", "##s", "bad"};
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.num_heads = 2;
  cfg.hidden_dim = 8;
  cfg.ffn_dim = 16;
  cfg.vocab_size = static_cast<int>(entries.size());
  cfg.max_positions = max_positions;
  cfg.num_classes = 2;
  return Model{random_bundle(cfg, 1234), Vocab(entries)};
}

const char* kSentence = "The movie was good, and I liked it very much.";

}  // namespace

TEST(Rank, Examples) {
  EXPECT_EQ(rank(std::vector<double>{0.1, 0.9, 0.5}).order, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(rank(std::vector<double>{0.5, 0.5}).order, (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(rank(std::vector<double>{}), Error);
  EXPECT_THROW(rank(std::vector<double>{0.1, std::nan("")}), Error);
}

TEST(Rank, WorkedSentenceScores) {
  // Words: The movie was good , and I liked it very much
  const std::vector<double> s{0.1, 0.95, 0.2, 0.90, 0.05, 0.1, 0.3, 0.80, 0.15, 0.4, 0.85};
  const auto pi = rank(s);
  EXPECT_EQ(std::vector<std::size_t>(pi.order.begin(), pi.order.begin() + 4),
            (std::vector<std::size_t>{1, 3, 10, 7}));
}

TEST(RetentionCount, CeilingAndRange) {
  EXPECT_EQ(retention_count(40, 11), 5u);
  EXPECT_EQ(retention_count(50, 10), 5u);
  EXPECT_EQ(retention_count(100, 7), 7u);
  EXPECT_EQ(retention_count(34, 3), 2u);
  EXPECT_EQ(retention_count(1, 1), 1u);
  EXPECT_EQ(retention_count(70, 10), 7u);  // 0.7 * 10 is not exactly 7 in binary
  EXPECT_THROW(retention_count(0, 10), Error);
  EXPECT_THROW(retention_count(100.5, 10), Error);
  EXPECT_THROW(retention_count(-5, 10), Error);
}

TEST(Select, TopExamples) {
  const auto pi = rank(std::vector<double>{0.3, 0.1, 0.9, 0.7, 0.5, 0.2, 0.8, 0.6, 0.4, 0.0, 1.0});
  EXPECT_EQ(select_top_k(pi, 100, 11), iota_vec(11));
  EXPECT_EQ(select_top_k(pi, 40, 11), (std::vector<std::size_t>{2, 3, 6, 7, 10}));
  const auto pi10 = rank(std::vector<double>{9, 8, 7, 6, 5, 4, 3, 2, 1, 0});
  EXPECT_EQ(select_top_k(pi10, 50, 10), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Select, BottomExamples) {
  EXPECT_EQ(select_bottom_k(rank(std::vector<double>{3, 2, 1}), 34, 3), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(select_bottom_k(rank(std::vector<double>{3, 2, 1}), 100, 3), iota_vec(3));
  EXPECT_EQ(select_bottom_k(rank(std::vector<double>{0.9, 0.1}), 50, 2), (std::vector<std::size_t>{1}));
}

TEST(Select, RandomExamples) {
  EXPECT_EQ(select_random_k(9, 100, 1), iota_vec(9));
  EXPECT_EQ(select_random_k(9, 100, 2), iota_vec(9));
  EXPECT_EQ(select_random_k(500, 30, 7), select_random_k(500, 30, 7));
  EXPECT_NE(select_random_k(500, 30, 7), select_random_k(500, 30, 8));
  const auto r = select_random_k(500, 30, 7);
  EXPECT_EQ(r.size(), 150u);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  EXPECT_EQ(std::set<std::size_t>(r.begin(), r.end()).size(), r.size());
}

TEST(Select, RandomIsUniform) {
  constexpr std::size_t m = 1000;
  constexpr int trials = 1000;
  std::vector<int> hits(m, 0);
  for (int t = 0; t < trials; ++t) {
    for (const auto i : select_random_k(m, 50, static_cast<std::uint64_t>(t))) ++hits[i];
  }
  // Each count is Binomial(trials, 1/2): variance 250. Summed over m cells
  // the normalised squares have mean ~m and sd ~sqrt(2m).
  const double var = trials * 0.25;
  double stat = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = hits[i] - trials * 0.5;
    ASSERT_LT(std::abs(d), 6.0 * std::sqrt(var)) << "index " << i;
    stat += d * d / var;
  }
  EXPECT_LT(stat, m + 6.0 * std::sqrt(2.0 * m));
  EXPECT_GT(stat, m - 6.0 * std::sqrt(2.0 * m));
}

TEST(SelectProperty, FilterAlgebra) {
  SplitMix64 rng(555);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t m = 1 + rng.below(300);
    std::vector<double> s(m);
    // Coarse values force plenty of ties.
    for (auto& v : s) v = static_cast<double>(rng.below(20)) / 7.0 - 1.0;
    const double k1 = 1 + static_cast<double>(rng.below(100));
    const double k2 = 1 + static_cast<double>(rng.below(100));
    const auto pi = rank(s);

    for (std::size_t r = 1; r < m; ++r) ASSERT_GE(s[pi.order[r - 1]], s[pi.order[r]]);

    const auto top = select_top_k(pi, k1, m);
    ASSERT_EQ(top.size(), static_cast<std::size_t>(std::ceil(k1 * static_cast<double>(m) / 100.0 - 1e-9)));
    ASSERT_TRUE(std::adjacent_find(top.begin(), top.end(), std::greater_equal<>()) == top.end());

    const auto lo = std::min(k1, k2), hi = std::max(k1, k2);
    const auto small = select_top_k(pi, lo, m), big = select_top_k(pi, hi, m);
    ASSERT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));

    std::vector<double> scaled(s);
    const double c = 0.01 + rng.uniform() * 100.0;
    for (auto& v : scaled) v *= c;
    ASSERT_EQ(select_top_k(rank(scaled), k1, m), top);

    // top-k and bottom-(100-k) partition when their counts add up to m.
    if (k1 < 100 && retention_count(k1, m) + retention_count(100 - k1, m) == m) {
      const auto bottom = select_bottom_k(pi, 100 - k1, m);
      std::vector<std::size_t> all;
      std::merge(top.begin(), top.end(), bottom.begin(), bottom.end(), std::back_inserter(all));
      ASSERT_EQ(all, iota_vec(m));
    }
  }
}

TEST(Frugalize, WorkedSentenceWithFixedCount) {
  const auto model = tiny_model();
  const auto input = tokenize(kSentence, model.vocab);
  SaliencyVector s;
  s.unit = SaliencyUnit::word;
  s.scores = {0.1, 0.95, 0.2, 0.90, 0.05, 0.1, 0.3, 0.80, 0.15, 0.4, 0.85, 0.0};
  FrugalizeOptions opts;
  opts.k = 40;
  opts.count_override = 4;
  const auto r = compress_scored(input, s, opts);
  EXPECT_EQ(r.reduced_text, "movie good liked much");
  EXPECT_EQ(r.kept_indices, (std::vector<std::size_t>{1, 3, 7, 10}));
  EXPECT_EQ(r.p, 4u);

  // Without the override the formula keeps ceil(0.4 * 12) = 5 words.
  opts.count_override.reset();
  EXPECT_EQ(compress_scored(input, s, opts).reduced_text, "movie good liked very much");
}

TEST(Frugalize, FullRetentionIsIdentity) {
  const auto model = tiny_model();
  for (const auto m : {CompressionMethod::globenc, CompressionMethod::decompx, CompressionMethod::rollout,
                       CompressionMethod::random, CompressionMethod::bottom_globenc}) {
    FrugalizeOptions opts;
    opts.method = m;
    opts.k = 100;
    const auto r = frugalize("The  movie was\tgood, and I liked it very much.", &model, opts);
    EXPECT_EQ(r.reduced_text, kSentence);
    EXPECT_EQ(r.kept_count, r.original_count);
  }
}

TEST(Frugalize, RandomIsReproducibleAndModelFree) {
  FrugalizeOptions opts;
  opts.method = CompressionMethod::random;
  opts.k = 50;
  opts.seed = 99;
  const auto a = frugalize(kSentence, nullptr, opts);
  const auto b = frugalize(kSentence, nullptr, opts);
  EXPECT_EQ(a.reduced_text, b.reduced_text);
  EXPECT_EQ(a.kept_count, 6u);
  const auto model = tiny_model();
  EXPECT_EQ(frugalize(kSentence, &model, opts).kept_indices, a.kept_indices);
}

TEST(Frugalize, AttributionMethodsKeepOrderedSubsequence) {
  const auto model = tiny_model();
  const auto source = text::split_words(kSentence);
  for (const auto m : {CompressionMethod::globenc, CompressionMethod::decompx, CompressionMethod::rollout,
                       CompressionMethod::bottom_globenc, CompressionMethod::bottom_decompx}) {
    for (const auto unit : {SaliencyUnit::word, SaliencyUnit::subword}) {
      FrugalizeOptions opts;
      opts.method = m;
      opts.k = 60;
      opts.unit = unit;
      const auto r = frugalize(kSentence, &model, opts);
      EXPECT_EQ(r.kept_count, retention_count(60, r.original_count));
      // Every output word appears in the source, in order.
      std::size_t cursor = 0;
      for (const auto& span : text::split_words(r.reduced_text)) {
        const std::string_view w = std::string_view(r.reduced_text).substr(span.begin, span.size());
        while (cursor < source.size() &&
               std::string_view(kSentence).substr(source[cursor].begin, source[cursor].size()) != w) {
          ++cursor;
        }
        ASSERT_LT(cursor, source.size()) << to_string(m) << " emitted " << w;
        ++cursor;
      }
    }
  }
}

TEST(Frugalize, SubwordUnitEmitsWholeWords) {
  const auto model = tiny_model();
  const auto input = tokenize("unhappy movies", model.vocab);
  ASSERT_EQ(input.content_word_index().size(), 4u);  // un ##happy movie ##s
  SaliencyVector s;
  s.unit = SaliencyUnit::subword;
  s.scores = {0.1, 0.9, 0.2, 0.3};
  FrugalizeOptions opts;
  opts.k = 25;
  opts.unit = SaliencyUnit::subword;
  const auto r = compress_scored(input, s, opts);
  EXPECT_EQ(r.kept_indices, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.reduced_text, "unhappy");
}

TEST(Frugalize, LongInputsAreChunked) {
  const auto model = tiny_model(6);  // four content tokens per chunk
  const std::string text = "the movie was good and i liked it very much the movie";
  const auto scored = score_text(text, model, AttributionMethod::globenc);
  EXPECT_EQ(scored.chunks, 3u);
  EXPECT_EQ(scored.saliency.size(), 12u);
  FrugalizeOptions opts;
  opts.method = CompressionMethod::decompx;
  opts.k = 50;
  const auto r = frugalize(text, &model, opts);
  EXPECT_EQ(r.kept_count, 6u);
}

TEST(Frugalize, ModelRequiredForAttribution) {
  FrugalizeOptions opts;
  opts.method = CompressionMethod::globenc;
  opts.k = 50;
  EXPECT_THROW(frugalize(kSentence, nullptr, opts), Error);
  opts.k = 0;
  opts.method = CompressionMethod::random;
  EXPECT_THROW(frugalize(kSentence, nullptr, opts), Error);
}
