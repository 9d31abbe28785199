#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/attribution.hpp"
#include "frugal/encoder.hpp"
#include "frugal/tokenizer.hpp"

namespace frugal {

enum class CompressionMethod { globenc, decompx, rollout, random, bottom_globenc, bottom_decompx };

std::string_view to_string(CompressionMethod m) noexcept;
std::optional<CompressionMethod> parse_compression_method(std::string_view s) noexcept;

/// Attribution method behind a compression method; empty for random.
std::optional<AttributionMethod> attribution_for(CompressionMethod m) noexcept;

/// Indices ordered by non-increasing score; ties keep the smaller index first.
struct RankingPermutation {
  std::vector<std::size_t> order;

  std::size_t size() const noexcept { return order.size(); }
};

/// Throws Error{empty_input | non_finite_score}.
RankingPermutation rank(std::span<const double> scores);

/// p = ceil(k / 100 * m). Throws Error{invalid_argument} unless 0 < k <= 100.
std::size_t retention_count(double k, std::size_t m);

/// First / last p entries of the ranking, returned ascending.
std::vector<std::size_t> take_top(const RankingPermutation& pi, std::size_t p);
std::vector<std::size_t> take_bottom(const RankingPermutation& pi, std::size_t p);

std::vector<std::size_t> select_top_k(const RankingPermutation& pi, double k, std::size_t m);
std::vector<std::size_t> select_bottom_k(const RankingPermutation& pi, double k, std::size_t m);

/// p indices drawn uniformly without replacement (partial Fisher-Yates driven
/// by SplitMix64 seeded with `seed`), returned ascending.
std::vector<std::size_t> select_random_k(std::size_t m, double k, std::uint64_t seed);

/// An encoder checkpoint together with the vocabulary it was trained on.
struct Model {
  EncoderBundle bundle;
  Vocab vocab;
};

struct ScoringOptions {
  SaliencyUnit unit = SaliencyUnit::word;
  /// Defaults to cls_row for matrix-valued methods.
  std::optional<ReductionMode> mode;
  std::optional<int> target;  // decompx; empty means the predicted class
  ScoreSign sign = ScoreSign::signed_score;
  WordPooling pooling = WordPooling::mean;
};

struct ScoredText {
  TokenizedInput input;
  SaliencyVector saliency;
  std::size_t chunks = 1;
};

/// Tokenizes and scores `text`. Inputs longer than the encoder's
/// max_positions are split at word boundaries into maximal chunks, each
/// scored independently; the chunk vectors are concatenated.
ScoredText score_text(std::string_view text, const Model& model, AttributionMethod method,
                      const ScoringOptions& options = {});

struct CompressionResult {
  std::string reduced_text;
  std::vector<std::size_t> kept_indices;
  double k = 100.0;
  std::size_t p = 0;
  CompressionMethod method = CompressionMethod::globenc;
  SaliencyUnit unit = SaliencyUnit::word;
  std::size_t original_count = 0;
  std::size_t kept_count = 0;
};

struct FrugalizeOptions {
  CompressionMethod method = CompressionMethod::globenc;
  double k = 100.0;
  SaliencyUnit unit = SaliencyUnit::word;
  std::optional<ReductionMode> mode;
  std::uint64_t seed = 0;
  /// Overrides the ceil(k m / 100) count, e.g. to replay a fixed-size example.
  std::optional<std::size_t> count_override;
  std::optional<int> target;
  ScoreSign sign = ScoreSign::signed_score;
  WordPooling pooling = WordPooling::mean;
};

/// Selects from precomputed scores and rebuilds the text. For subword units
/// every word with at least one kept subword is emitted whole.
CompressionResult compress_scored(const TokenizedInput& input, const SaliencyVector& saliency,
                                  const FrugalizeOptions& options);

/// tokenize -> forward -> attribution -> aggregation -> rank -> select ->
/// reconstruct. `model` may be null only for random selection over words.
CompressionResult frugalize(std::string_view text, const Model* model, const FrugalizeOptions& options);

/// Word-split view of a text without subword tokens (for model-free paths).
TokenizedInput split_only(std::string_view text);

}  // namespace frugal
