#include "frugal/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frugal/error.hpp"
#include "frugal/random.hpp"

namespace frugal {

std::string_view to_string(CompressionMethod m) noexcept {
  switch (m) {
    case CompressionMethod::globenc: return "globenc";
    case CompressionMethod::decompx: return "decompx";
    case CompressionMethod::rollout: return "rollout";
    case CompressionMethod::random: return "random";
    case CompressionMethod::bottom_globenc: return "bottom_globenc";
    case CompressionMethod::bottom_decompx: return "bottom_decompx";
  }
  return "unknown";
}

std::optional<CompressionMethod> parse_compression_method(std::string_view s) noexcept {
  for (auto m : {CompressionMethod::globenc, CompressionMethod::decompx, CompressionMethod::rollout,
                 CompressionMethod::random, CompressionMethod::bottom_globenc,
                 CompressionMethod::bottom_decompx}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::optional<AttributionMethod> attribution_for(CompressionMethod m) noexcept {
  switch (m) {
    case CompressionMethod::globenc:
    case CompressionMethod::bottom_globenc: return AttributionMethod::globenc;
    case CompressionMethod::decompx:
    case CompressionMethod::bottom_decompx: return AttributionMethod::decompx;
    case CompressionMethod::rollout: return AttributionMethod::rollout;
    case CompressionMethod::random: return std::nullopt;
  }
  return std::nullopt;
}

RankingPermutation rank(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::empty_input, "cannot rank an empty saliency vector");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) {
      throw Error(Errc::non_finite_score, "saliency score " + std::to_string(i) + " is NaN");
    }
  }
  RankingPermutation pi;
  pi.order.resize(scores.size());
  std::iota(pi.order.begin(), pi.order.end(), std::size_t{0});
  std::stable_sort(pi.order.begin(), pi.order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return pi;
}

std::size_t retention_count(double k, std::size_t m) {
  if (!(k > 0.0 && k <= 100.0)) {
    throw Error(Errc::invalid_argument, "retention percentage k must lie in (0, 100]");
  }
  const double exact = k * static_cast<double>(m) / 100.0;
  // Exact for integral k. A fractional k (e.g. 33.3) can land a rounding
  // error above an integer; snap those instead of taking the ceiling.
  const double nearest = std::round(exact);
  const double p = std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest : std::ceil(exact);
  return std::min(m, static_cast<std::size_t>(p));
}

std::vector<std::size_t> take_top(const RankingPermutation& pi, std::size_t p) {
  p = std::min(p, pi.size());
  std::vector<std::size_t> out(pi.order.begin(), pi.order.begin() + static_cast<std::ptrdiff_t>(p));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> take_bottom(const RankingPermutation& pi, std::size_t p) {
  p = std::min(p, pi.size());
  std::vector<std::size_t> out(pi.order.end() - static_cast<std::ptrdiff_t>(p), pi.order.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> select_top_k(const RankingPermutation& pi, double k, std::size_t m) {
  if (m != pi.size()) throw Error(Errc::length_mismatch, "ranking size does not match m");
  return take_top(pi, retention_count(k, m));
}

std::vector<std::size_t> select_bottom_k(const RankingPermutation& pi, double k, std::size_t m) {
  if (m != pi.size()) throw Error(Errc::length_mismatch, "ranking size does not match m");
  return take_bottom(pi, retention_count(k, m));
}

namespace {

std::vector<std::size_t> random_subset(std::size_t m, std::size_t p, std::uint64_t seed) {
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(p);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

std::vector<std::size_t> select_random_k(std::size_t m, double k, std::uint64_t seed) {
  return random_subset(m, retention_count(k, m), seed);
}

TokenizedInput split_only(std::string_view text) {
  TokenizedInput out;
  out.text = std::string(text);
  out.word_spans = text::split_words(out.text);
  if (out.word_spans.empty()) throw Error(Errc::empty_input, "input text has no words");
  return out;
}

namespace {

struct Chunk {
  std::size_t first_token;  // index into the content (non-special) tokens
  std::size_t count;
};

std::vector<Chunk> plan_chunks(const TokenizedInput& input, std::size_t capacity) {
  const auto words = input.content_word_index();
  std::vector<Chunk> chunks;
  std::size_t t = 0;
  Chunk current{0, 0};
  while (t < words.size()) {
    std::size_t end = t;
    while (end < words.size() && words[end] == words[t]) ++end;
    std::size_t word_len = end - t;
    if (current.count + word_len <= capacity) {
      current.count += word_len;
      t = end;
      continue;
    }
    if (current.count > 0) {
      chunks.push_back(current);
      current = {t, 0};
      continue;
    }
    // A single word longer than a chunk is cut across chunks.
    while (word_len > capacity) {
      chunks.push_back({t, capacity});
      t += capacity;
      word_len -= capacity;
    }
    current = {t, 0};
  }
  if (current.count > 0) chunks.push_back(current);
  return chunks;
}

std::vector<double> score_sequence(const Model& model, std::span<const TokenId> content,
                                   AttributionMethod method, const ScoringOptions& options,
                                   int* target_out) {
  std::vector<std::int32_t> ids;
  ids.reserve(content.size() + 2);
  ids.push_back(model.vocab.start_id());
  ids.insert(ids.end(), content.begin(), content.end());
  ids.push_back(model.vocab.end_id());
  std::vector<bool> special(ids.size(), false);
  special.front() = special.back() = true;

  const auto trace = forward(model.bundle, ids);
  if (method == AttributionMethod::decompx) {
    auto s = decompx(trace, model.bundle, options.target, special, options.sign);
    if (target_out) *target_out = s.target_class;
    return std::move(s.scores);
  }
  const auto grid = method == AttributionMethod::globenc ? globenc(trace, model.bundle)
                                                         : attention_rollout(trace);
  auto s = matrix_to_saliency(grid, options.mode.value_or(ReductionMode::cls_row), special);
  if (options.sign == ScoreSign::magnitude) {
    for (auto& v : s.scores) v = std::abs(v);
  }
  return std::move(s.scores);
}

}  // namespace

ScoredText score_text(std::string_view text, const Model& model, AttributionMethod method,
                      const ScoringOptions& options) {
  ScoredText out;
  out.input = tokenize(text, model.vocab);
  const auto max_positions = static_cast<std::size_t>(model.bundle.config.max_positions);
  if (max_positions < 3) {
    throw Error(Errc::invalid_config, "max_positions must leave room for at least one content token");
  }

  std::vector<TokenId> content;
  for (std::size_t t = 0; t < out.input.size(); ++t) {
    if (!out.input.special_mask[t]) content.push_back(out.input.token_ids[t]);
  }

  out.saliency.method = method;
  out.saliency.unit = SaliencyUnit::subword;
  const auto chunks = plan_chunks(out.input, max_positions - 2);
  out.chunks = chunks.size();
  for (const auto& chunk : chunks) {
    int target = -1;
    auto scores = score_sequence(model, std::span(content).subspan(chunk.first_token, chunk.count),
                                 method, options, &target);
    out.saliency.scores.insert(out.saliency.scores.end(), scores.begin(), scores.end());
    if (out.saliency.target_class < 0) out.saliency.target_class = target;
  }

  if (options.unit == SaliencyUnit::word) {
    const auto words = out.input.content_word_index();
    out.saliency = aggregate_to_words(out.saliency, words, options.pooling);
  }
  return out;
}

namespace {

bool is_bottom(CompressionMethod m) {
  return m == CompressionMethod::bottom_globenc || m == CompressionMethod::bottom_decompx;
}

CompressionResult finish(const TokenizedInput& input, std::vector<std::size_t> kept,
                         const FrugalizeOptions& options, std::size_t units) {
  CompressionResult out;
  out.k = options.k;
  out.method = options.method;
  out.unit = options.unit;
  out.original_count = units;
  out.p = kept.size();
  out.kept_count = kept.size();

  std::vector<std::int32_t> words;
  if (options.unit == SaliencyUnit::word) {
    words.assign(kept.begin(), kept.end());
  } else {
    const auto word_of = input.content_word_index();
    for (const auto t : kept) {
      const auto w = word_of.at(t);
      if (words.empty() || words.back() != w) words.push_back(w);
    }
  }
  out.reduced_text = reconstruct(input, words);
  out.kept_indices = std::move(kept);
  return out;
}

}  // namespace

CompressionResult compress_scored(const TokenizedInput& input, const SaliencyVector& saliency,
                                  const FrugalizeOptions& options) {
  const std::size_t m = saliency.size();
  const std::size_t p = options.count_override ? std::min(*options.count_override, m)
                                               : retention_count(options.k, m);
  const auto pi = rank(saliency.scores);
  auto kept = is_bottom(options.method) ? take_bottom(pi, p) : take_top(pi, p);
  return finish(input, std::move(kept), options, m);
}

CompressionResult frugalize(std::string_view text, const Model* model, const FrugalizeOptions& options) {
  // Validate k up front so every path reports a bad range the same way.
  retention_count(options.k, 1);

  if (options.method == CompressionMethod::random) {
    TokenizedInput input;
    std::size_t m = 0;
    if (options.unit == SaliencyUnit::word) {
      input = model ? tokenize(text, model->vocab) : split_only(text);
      m = input.word_count();
    } else {
      if (!model) throw Error(Errc::invalid_argument, "subword units need a model vocabulary");
      input = tokenize(text, model->vocab);
      m = input.content_word_index().size();
    }
    const std::size_t p = options.count_override ? std::min(*options.count_override, m)
                                                 : retention_count(options.k, m);
    return finish(input, random_subset(m, p, options.seed), options, m);
  }

  if (!model) throw Error(Errc::invalid_argument, "attribution methods need a model");
  const auto method = *attribution_for(options.method);

  if (options.k >= 100.0 && !options.count_override) {
    // Everything is kept; skip the encoder.
    auto input = tokenize(text, model->vocab);
    const std::size_t m = options.unit == SaliencyUnit::word ? input.word_count()
                                                             : input.content_word_index().size();
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return finish(input, std::move(all), options, m);
  }

  ScoringOptions scoring;
  scoring.unit = options.unit;
  scoring.mode = options.mode;
  scoring.target = options.target;
  scoring.sign = options.sign;
  scoring.pooling = options.pooling;
  const auto scored = score_text(text, *model, method, scoring);
  return compress_scored(scored.input, scored.saliency, options);
}

}  // namespace frugal
