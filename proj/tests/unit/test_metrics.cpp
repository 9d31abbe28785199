#include <gtest/gtest.h>

#include <cmath>

#include "frugal/error.hpp"
#include "frugal/metrics.hpp"
#include "frugal/random.hpp"
#include "frugal/text.hpp"
#include "oracles.hpp"

using namespace frugal;

namespace {

ClassificationScores af1(std::vector<std::string> p, std::vector<std::string> g) { return accuracy_f1(p, g); }

std::string random_sentence(SplitMix64& rng, std::size_t max_len) {
  static const std::vector<std::string> pool{"the", "cat", "sat", "on", "a", "mat", "dog", "ran", "Cat", ",", "."};
  std::string s;
  const auto n = 1 + rng.below(max_len);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += pool[rng.below(pool.size())];
  }
  return s;
}

}  // namespace

TEST(AccuracyF1, Examples) {
  auto s = af1({"1", "0", "1"}, {"1", "0", "1"});
  EXPECT_DOUBLE_EQ(s.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(s.macro_f1, 1.0);
  s = af1({"1", "1", "0", "0"}, {"1", "0", "1", "0"});
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(s.macro_f1, 0.5);
  s = af1({"pos", "pos", "pos", "pos"}, {"pos", "pos", "neg", "neg"});
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  EXPECT_NEAR(s.macro_f1, 1.0 / 3.0, 1e-15);
}

TEST(AccuracyF1, UnparsedPredictionCountsAsAClass) {
  // An empty prediction is wrong and adds a zero-F1 class.
  const auto s = af1({"pos", ""}, {"pos", "neg"});
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  EXPECT_NEAR(s.macro_f1, (1.0 + 0.0 + 0.0) / 3.0, 1e-15);
}

TEST(AccuracyF1, Errors) {
  EXPECT_THROW(af1({"a"}, {"a", "b"}), Error);
  EXPECT_THROW(af1({}, {}), Error);
}

TEST(Bleu, Examples) {
  EXPECT_NEAR(bleu("The cat sat on the mat.", "the cat sat on the mat ."), 1.0, 1e-9);
  EXPECT_LE(bleu("dog ran", "the cat sat"), 1e-6);
  EXPECT_NEAR(bleu("the cat sat", "the cat sat down"), std::exp(-1.0 / 3.0), 1e-6);
  EXPECT_THROW(bleu("", "the cat"), Error);
  EXPECT_THROW(bleu("the cat", " \t"), Error);
}

TEST(Rouge, Examples) {
  const auto same = rouge("a b c d", "a b c d");
  EXPECT_NEAR(same.r1, 1.0, 1e-9);
  EXPECT_NEAR(same.r2, 1.0, 1e-9);
  EXPECT_NEAR(same.rl, 1.0, 1e-9);
  const auto r = rouge("a b c", "a x c");
  EXPECT_NEAR(r.r1, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.r2, 0.0);
  EXPECT_NEAR(r.rl, 2.0 / 3.0, 1e-12);
  const auto none = rouge("a b", "c d");
  EXPECT_DOUBLE_EQ(none.r1 + none.r2 + none.rl, 0.0);
}

TEST(Rouge, ClippedCounts) {
  // hyp "the the the" vs ref "the cat": one clipped unigram match.
  const auto r = rouge("the the the", "the cat");
  const double p = 1.0 / 3.0, rec = 1.0 / 2.0;
  EXPECT_NEAR(r.r1, 2 * p * rec / (p + rec), 1e-12);
}

TEST(Meteor, Examples) {
  EXPECT_NEAR(meteor("the cat", "cat the"), 0.5, 1e-9);
  EXPECT_NEAR(meteor("a b c d", "a b c d"), 1.0 - 0.5 / 64.0, 1e-12);
  EXPECT_DOUBLE_EQ(meteor("a b", "c d"), 0.0);
}

TEST(Meteor, PrefersFewerChunks) {
  // "a b a" vs "a b": aligning the first "a" gives one chunk of two.
  const double p = 2.0 / 3.0, r = 1.0;
  const double f = p * r / (0.9 * p + 0.1 * r);
  EXPECT_NEAR(meteor("a b a", "a b"), f * (1.0 - 0.5 * std::pow(1.0 / 2.0, 3)), 1e-12);
}

TEST(PassAt1, Examples) {
  EXPECT_TRUE(pass_at_1("... so the answer is 42.", 42));
  EXPECT_TRUE(pass_at_1("#### 1,234", 1234));
  EXPECT_FALSE(pass_at_1("no numbers here", 5));
  EXPECT_TRUE(pass_at_1("It costs 7 then 3 more, total -2.5", -2.5));
  EXPECT_TRUE(pass_at_1("#### 18\nchecking: 17 + 1", 18));
  EXPECT_FALSE(pass_at_1("#### 19", 18));
  EXPECT_TRUE(pass_at_1("1000000.0000001", 1000000));
  EXPECT_EQ(extract_final_number("answers 3, then 12,000 cows"), 12000.0);
}

TEST(MetricsProperty, BoundedAndSelfMaximal) {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_sentence(rng, 12);
    const auto y = random_sentence(rng, 12);
    const auto rx = rouge(x, x), ry = rouge(y, x);
    const double b = bleu(y, x), m = meteor(y, x);
    for (const double v : {b, m, ry.r1, ry.r2, ry.rl}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0 + 1e-12);
    }
    ASSERT_GE(bleu(x, x) + 1e-12, b);
    ASSERT_GE(meteor(x, x) + 1e-12, m);
    ASSERT_GE(rx.r1 + 1e-12, ry.r1);
    ASSERT_GE(rx.rl + 1e-12, ry.rl);
  }
}

TEST(MetricsProperty, RougeLMatchesBruteForceLcs) {
  SplitMix64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const auto hyp = random_sentence(rng, 12);
    const auto ref = random_sentence(rng, 12);
    const auto h = text::metric_tokens(hyp);
    const auto r = text::metric_tokens(ref);
    const auto lcs = oracle::brute_force_lcs(h, r);
    ASSERT_EQ(lcs_length(h, r), lcs);
    double expected = 0.0;
    if (lcs > 0) {
      const double p = static_cast<double>(lcs) / static_cast<double>(h.size());
      const double q = static_cast<double>(lcs) / static_cast<double>(r.size());
      expected = 2 * p * q / (p + q);
    }
    ASSERT_NEAR(rouge(hyp, ref).rl, expected, 1e-12) << hyp << " | " << ref;
  }
}
