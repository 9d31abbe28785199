#include "frugal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_map>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

std::string_view to_string(Task t) noexcept {
  switch (t) {
    case Task::cls: return "CLS";
    case Task::sum: return "SUM";
    case Task::qa: return "QA";
    case Task::rsn: return "RSN";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view s) noexcept {
  const auto lower = text::ascii_lower(s);
  if (lower == "cls") return Task::cls;
  if (lower == "sum") return Task::sum;
  if (lower == "qa") return Task::qa;
  if (lower == "rsn") return Task::rsn;
  return std::nullopt;
}

ClassificationScores accuracy_f1(std::span<const std::string> preds, std::span<const std::string> golds) {
  if (preds.size() != golds.size()) {
    throw Error(Errc::length_mismatch, "predictions and golds differ in length");
  }
  if (preds.empty()) throw Error(Errc::empty_input, "no predictions to score");

  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> per_class;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) {
      ++correct;
      ++per_class[preds[i]].tp;
    } else {
      ++per_class[preds[i]].fp;
      ++per_class[golds[i]].fn;
    }
  }
  double f1_sum = 0.0;
  for (const auto& [label, c] : per_class) {
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    f1_sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
  }
  return {static_cast<double>(correct) / static_cast<double>(preds.size()),
          f1_sum / static_cast<double>(per_class.size())};
}

namespace {

using Tokens = std::vector<std::string>;

Tokens tokens_or_throw(std::string_view s, const char* which) {
  auto toks = text::metric_tokens(s);
  if (toks.empty()) {
    throw Error(Errc::empty_input, std::string(which) + " is empty after tokenization");
  }
  return toks;
}

std::map<Tokens, std::size_t> ngram_counts(const Tokens& toks, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[Tokens(toks.begin() + static_cast<std::ptrdiff_t>(i),
                    toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t clipped_overlap(const std::map<Tokens, std::size_t>& hyp,
                            const std::map<Tokens, std::size_t>& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

double f1_from_overlap(std::size_t overlap, std::size_t hyp_total, std::size_t ref_total) {
  if (overlap == 0 || hyp_total == 0 || ref_total == 0) return 0.0;
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(hyp_total + ref_total);
}

}  // namespace

double bleu(std::string_view hyp_text, std::string_view ref_text) {
  const auto hyp = tokens_or_throw(hyp_text, "hypothesis");
  const auto ref = tokens_or_throw(ref_text, "reference");
  constexpr double kSmoothing = 1e-9;
  const std::size_t max_order = std::min<std::size_t>(4, hyp.size());

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_order; ++n) {
    const auto h = ngram_counts(hyp, n);
    const std::size_t total = hyp.size() - n + 1;
    const std::size_t matches = clipped_overlap(h, ngram_counts(ref, n));
    const double numerator = matches == 0 ? kSmoothing : static_cast<double>(matches);
    log_sum += std::log(numerator / static_cast<double>(total));
  }
  const double c = static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / static_cast<double>(max_order));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScores rouge(std::string_view hyp_text, std::string_view ref_text) {
  const auto hyp = tokens_or_throw(hyp_text, "hypothesis");
  const auto ref = tokens_or_throw(ref_text, "reference");
  RougeScores out;
  for (std::size_t n : {1u, 2u}) {
    const std::size_t hyp_total = hyp.size() >= n ? hyp.size() - n + 1 : 0;
    const std::size_t ref_total = ref.size() >= n ? ref.size() - n + 1 : 0;
    const double f1 = f1_from_overlap(clipped_overlap(ngram_counts(hyp, n), ngram_counts(ref, n)),
                                      hyp_total, ref_total);
    (n == 1 ? out.r1 : out.r2) = f1;
  }
  out.rl = f1_from_overlap(lcs_length(hyp, ref), hyp.size(), ref.size());
  return out;
}

namespace {

// Exact-match alignment: among alignments with the maximum number of
// matches, find the one with the fewest chunks (runs of hypothesis matches
// landing on consecutive reference positions). Depth-first search with
// branch-and-bound; falls back to the best alignment found once the node
// budget runs out.
class ChunkMinimizer {
 public:
  ChunkMinimizer(const Tokens& hyp, const Tokens& ref) : hyp_(hyp), used_(ref.size(), false) {
    std::unordered_map<std::string, std::size_t> ref_count;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      positions_[ref[j]].push_back(j);
      ++ref_count[ref[j]];
    }
    std::unordered_map<std::string, std::size_t> hyp_count;
    for (const auto& w : hyp) ++hyp_count[w];
    for (const auto& [w, hc] : hyp_count) {
      const std::size_t rc = ref_count.count(w) ? ref_count[w] : 0;
      matches_ += std::min(hc, rc);
      // A hypothesis occurrence may stay unmatched only while surplus remains.
      skips_[w] = hc - std::min(hc, rc);
    }
  }

  std::size_t matches() const noexcept { return matches_; }

  std::size_t min_chunks() {
    if (matches_ == 0) return 0;
    best_ = matches_;  // every match its own chunk is always achievable
    search(0, kNone, 0);
    return best_;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNodeBudget = 200000;

  void search(std::size_t i, std::size_t prev_ref, std::size_t chunks) {
    if (chunks >= best_ || ++nodes_ > kNodeBudget) return;
    if (i == hyp_.size()) {
      best_ = chunks;
      return;
    }
    const auto& word = hyp_[i];
    auto pos_it = positions_.find(word);
    if (pos_it != positions_.end()) {
      // Try the continuing position first so good solutions are found early.
      const auto& cands = pos_it->second;
      if (prev_ref != kNone && prev_ref + 1 < used_.size() && !used_[prev_ref + 1] &&
          hyp_at_ref(prev_ref + 1, word)) {
        used_[prev_ref + 1] = true;
        search(i + 1, prev_ref + 1, chunks);
        used_[prev_ref + 1] = false;
      }
      for (const auto j : cands) {
        if (used_[j] || (prev_ref != kNone && j == prev_ref + 1)) continue;
        used_[j] = true;
        search(i + 1, j, chunks + 1);
        used_[j] = false;
      }
    }
    auto& skips = skips_[word];
    if (skips > 0) {
      --skips;
      // An unmatched hypothesis word breaks adjacency.
      search(i + 1, kNone, chunks);
      ++skips;
    }
  }

  bool hyp_at_ref(std::size_t j, const std::string& word) const {
    const auto& cands = positions_.at(word);
    return std::binary_search(cands.begin(), cands.end(), j);
  }

  const Tokens& hyp_;
  std::vector<bool> used_;
  std::unordered_map<std::string, std::vector<std::size_t>> positions_;
  std::unordered_map<std::string, std::size_t> skips_;
  std::size_t matches_ = 0;
  std::size_t best_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

double meteor(std::string_view hyp_text, std::string_view ref_text) {
  const auto hyp = tokens_or_throw(hyp_text, "hypothesis");
  const auto ref = tokens_or_throw(ref_text, "reference");
  constexpr double kAlpha = 0.9, kBeta = 3.0, kGamma = 0.5;

  ChunkMinimizer aligner(hyp, ref);
  const std::size_t matches = aligner.matches();
  if (matches == 0) return 0.0;
  const std::size_t chunks = aligner.min_chunks();

  const double m = static_cast<double>(matches);
  const double precision = m / static_cast<double>(hyp.size());
  const double recall = m / static_cast<double>(ref.size());
  const double f_mean = precision * recall / (kAlpha * precision + (1.0 - kAlpha) * recall);
  const double penalty = kGamma * std::pow(static_cast<double>(chunks) / m, kBeta);
  return f_mean * (1.0 - penalty);
}

std::optional<double> extract_final_number(std::string_view response) {
  static const std::regex kAnswerLine(R"(####\s*([-+]?(?:\d[\d,]*)?\.?\d+))");
  static const std::regex kNumber(R"([-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|[-+]?\.\d+)");

  const std::string s(response);
  std::string found;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kAnswerLine); it != std::sregex_iterator(); ++it) {
    found = (*it)[1].str();
  }
  if (found.empty()) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kNumber); it != std::sregex_iterator(); ++it) {
      found = it->str();
    }
  }
  if (found.empty()) return std::nullopt;
  found.erase(std::remove(found.begin(), found.end(), ','), found.end());
  try {
    return std::stod(found);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool pass_at_1(std::string_view response, double gold) {
  const auto got = extract_final_number(response);
  if (!got) return false;
  return std::abs(*got - gold) <= 1e-6 * std::max(std::abs(*got), std::abs(gold));
}

}  // namespace frugal
