#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "frugal/text.hpp"

namespace frugal {

using TokenId = std::int32_t;

/// Immutable subword vocabulary. Line number in the vocab file is the id.
class Vocab {
 public:
  static constexpr std::string_view kStartMarker = "[CLS]";
  static constexpr std::string_view kEndMarker = "[SEP]";
  static constexpr std::string_view kUnknownMarker = "[UNK]";
  static constexpr std::string_view kContinuationPrefix = "##";

  /// Throws Error{duplicate_entry | empty_entry | missing_special}.
  explicit Vocab(std::vector<std::string> entries, bool lowercase = true);

  std::size_t size() const noexcept { return entries_.size(); }
  bool lowercase() const noexcept { return lowercase_; }

  TokenId start_id() const noexcept { return start_id_; }
  TokenId end_id() const noexcept { return end_id_; }
  TokenId unknown_id() const noexcept { return unknown_id_; }

  /// Returns -1 when absent.
  TokenId find(std::string_view piece) const;
  const std::string& piece(TokenId id) const { return entries_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId> ids_;
  bool lowercase_ = true;
  TokenId start_id_ = -1;
  TokenId end_id_ = -1;
  TokenId unknown_id_ = -1;
};

/// One subword per line; an optional first line `#lowercase=true|false`.
Vocab load_vocab(const std::filesystem::path& path);

struct TokenizedInput {
  static constexpr std::int32_t kNoWord = -1;

  std::string text;
  std::vector<TokenId> token_ids;
  std::vector<std::string> token_strings;
  std::vector<std::int32_t> word_index;
  std::vector<bool> special_mask;
  std::vector<text::ByteSpan> word_spans;

  std::size_t size() const noexcept { return token_ids.size(); }
  std::size_t word_count() const noexcept { return word_spans.size(); }
  std::string_view word(std::size_t w) const {
    const auto& span = word_spans.at(w);
    return std::string_view(text).substr(span.begin, span.size());
  }
  /// Word index for each non-special token, in token order.
  std::vector<std::int32_t> content_word_index() const;
};

/// Longest-match subword segmentation. Words longer than this many code
/// points map straight to the unknown marker.
inline constexpr std::size_t kMaxWordChars = 100;

/// Throws Error{empty_input} when the text holds no words.
TokenizedInput tokenize(std::string_view text, const Vocab& vocab);

/// Joins the surface forms of `kept_words` in source order. Adjacent words
/// that touched in the source (e.g. "good" and ",") are rejoined without a
/// gap; every other boundary becomes a single space.
std::string reconstruct(const TokenizedInput& input, std::span<const std::int32_t> kept_words);

}  // namespace frugal
