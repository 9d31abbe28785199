#include "frugal/tokenizer.hpp"

#include <fstream>

#include "frugal/error.hpp"

namespace frugal {

Vocab::Vocab(std::vector<std::string> entries, bool lowercase)
    : entries_(std::move(entries)), lowercase_(lowercase) {
  ids_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& entry = entries_[i];
    if (entry.empty()) {
      throw Error(Errc::empty_entry, "vocab entry " + std::to_string(i) + " is empty");
    }
    auto [it, inserted] = ids_.emplace(entry, static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(Errc::duplicate_entry, "duplicate vocab entry '" + entry + "' at ids " +
                                             std::to_string(it->second) + " and " +
                                             std::to_string(i));
    }
  }
  start_id_ = find(kStartMarker);
  end_id_ = find(kEndMarker);
  unknown_id_ = find(kUnknownMarker);
  for (auto [name, id] : {std::pair{kStartMarker, start_id_}, std::pair{kEndMarker, end_id_},
                          std::pair{kUnknownMarker, unknown_id_}}) {
    if (id < 0) {
      throw Error(Errc::missing_special, "vocab is missing special marker " + std::string(name));
    }
  }
}

TokenId Vocab::find(std::string_view piece) const {
  auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? -1 : it->second;
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::missing_file, "cannot open vocab file " + path.string());
  }
  std::vector<std::string> entries;
  bool lowercase = true;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      if (line.starts_with("#lowercase=")) {
        const auto value = line.substr(11);
        if (value == "true") {
          lowercase = true;
        } else if (value == "false") {
          lowercase = false;
        } else {
          throw Error(Errc::parse_error, "bad vocab header value '" + value + "'");
        }
        continue;
      }
    }
    entries.push_back(std::move(line));
  }
  return Vocab(std::move(entries), lowercase);
}

std::vector<std::int32_t> TokenizedInput::content_word_index() const {
  std::vector<std::int32_t> out;
  out.reserve(size());
  for (std::size_t t = 0; t < size(); ++t) {
    if (!special_mask[t]) out.push_back(word_index[t]);
  }
  return out;
}

namespace {

// Code-point boundaries of `word`, including the final end offset.
std::vector<std::size_t> code_point_offsets(std::string_view word) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t pos = 0; pos < word.size();) {
    text::next_code_point(word, pos);
    offsets.push_back(pos);
  }
  return offsets;
}

struct Piece {
  TokenId id;
  std::string str;
};

std::vector<Piece> segment_word(std::string_view word, const Vocab& vocab) {
  const auto offsets = code_point_offsets(word);
  const std::size_t chars = offsets.size() - 1;
  const Piece unknown{vocab.unknown_id(), std::string(Vocab::kUnknownMarker)};
  if (chars > kMaxWordChars) return {unknown};

  std::vector<Piece> pieces;
  std::size_t start = 0;
  while (start < chars) {
    std::size_t end = chars;
    TokenId match = -1;
    std::string candidate;
    while (end > start) {
      candidate.clear();
      if (start > 0) candidate += Vocab::kContinuationPrefix;
      candidate += word.substr(offsets[start], offsets[end] - offsets[start]);
      match = vocab.find(candidate);
      if (match >= 0) break;
      --end;
    }
    if (match < 0) return {unknown};
    pieces.push_back({match, std::move(candidate)});
    start = end;
  }
  return pieces;
}

}  // namespace

TokenizedInput tokenize(std::string_view source, const Vocab& vocab) {
  TokenizedInput out;
  out.text = std::string(source);
  out.word_spans = text::split_words(out.text);
  if (out.word_spans.empty()) {
    throw Error(Errc::empty_input, "input text has no words");
  }

  const auto push = [&](TokenId id, std::string str, std::int32_t word, bool special) {
    out.token_ids.push_back(id);
    out.token_strings.push_back(std::move(str));
    out.word_index.push_back(word);
    out.special_mask.push_back(special);
  };

  push(vocab.start_id(), std::string(Vocab::kStartMarker), TokenizedInput::kNoWord, true);
  for (std::size_t w = 0; w < out.word_spans.size(); ++w) {
    std::string word(out.word(w));
    if (vocab.lowercase()) word = text::ascii_lower(word);
    for (auto& piece : segment_word(word, vocab)) {
      push(piece.id, std::move(piece.str), static_cast<std::int32_t>(w), false);
    }
  }
  push(vocab.end_id(), std::string(Vocab::kEndMarker), TokenizedInput::kNoWord, true);
  return out;
}

std::string reconstruct(const TokenizedInput& input, std::span<const std::int32_t> kept_words) {
  std::string out;
  std::int32_t prev = -1;
  for (const auto w : kept_words) {
    if (w < 0 || static_cast<std::size_t>(w) >= input.word_count()) {
      throw Error(Errc::index_out_of_range, "word index " + std::to_string(w) + " out of range");
    }
    if (w <= prev) {
      throw Error(Errc::invalid_argument, "kept word indices must be strictly increasing");
    }
    if (prev >= 0) {
      const bool touching = w == prev + 1 &&
          input.word_spans[static_cast<std::size_t>(prev)].end ==
              input.word_spans[static_cast<std::size_t>(w)].begin;
      if (!touching) out += ' ';
    }
    out += input.word(static_cast<std::size_t>(w));
    prev = w;
  }
  return out;
}

}  // namespace frugal
