#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frugal {

enum class Task { cls, sum, qa, rsn };

std::string_view to_string(Task t) noexcept;
std::optional<Task> parse_task(std::string_view s) noexcept;

/// Aggregated scores for one (method, k) cell. All values lie in [0, 1].
struct MetricReport {
  Task task = Task::cls;
  std::map<std::string, double> values;
  std::size_t sample_count = 0;
};

struct ClassificationScores {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Macro F1 over the union of predicted and gold labels.
/// Throws Error{length_mismatch | empty_input}.
ClassificationScores accuracy_f1(std::span<const std::string> preds, std::span<const std::string> golds);

/// BLEU-4 against a single reference. Orders with no hypothesis n-grams are
/// left out of the geometric mean; zero match counts are smoothed to 1e-9.
double bleu(std::string_view hyp, std::string_view ref);

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};
RougeScores rouge(std::string_view hyp, std::string_view ref);

/// Exact-match METEOR (alpha 0.9, beta 3, gamma 0.5).
double meteor(std::string_view hyp, std::string_view ref);

/// Last number in the response (a `#### n` answer line wins when present).
std::optional<double> extract_final_number(std::string_view response);
bool pass_at_1(std::string_view response, double gold);

/// Length of the longest common subsequence, classic O(nm) table.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace frugal
