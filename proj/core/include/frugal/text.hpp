#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace frugal::text {

/// Half-open byte range into a UTF-8 source string.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

/// Decodes one code point starting at `pos`; advances `pos`. Invalid bytes
/// decode as U+FFFD and consume a single byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept;

bool is_whitespace(char32_t cp) noexcept;
bool is_punctuation(char32_t cp) noexcept;

/// Splits on Unicode whitespace; every punctuation code point becomes a
/// standalone word.
std::vector<ByteSpan> split_words(std::string_view s);

/// ASCII-only lowercasing; other bytes pass through unchanged.
std::string ascii_lower(std::string_view s);

/// Lowercased words, as used by the overlap metrics.
std::vector<std::string> metric_tokens(std::string_view s);

std::size_t count_code_points(std::string_view s) noexcept;

/// Whitespace-delimited token count, the fallback usage estimate.
std::size_t whitespace_token_count(std::string_view s) noexcept;

}  // namespace frugal::text
