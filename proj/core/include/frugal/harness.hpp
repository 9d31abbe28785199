#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "frugal/compression.hpp"
#include "frugal/metrics.hpp"
#include "frugal/transport.hpp"

namespace frugal {

// --- datasets ---------------------------------------------------------------

/// One evaluation item. `body` is the part that gets compressed: the review
/// (CLS), document (SUM), context passage (QA) or problem statement (RSN).
struct Sample {
  std::string id;
  std::string body;
  std::string label;                 // CLS
  std::string reference;             // SUM
  std::string question;              // QA
  std::vector<std::string> choices;  // QA, exactly four
  int answer_index = -1;             // QA
  double answer_number = 0.0;        // RSN
};

/// Line-delimited JSON in the per-task schema (see README). Throws
/// Error{missing_file | parse_error}; parse errors name the line.
std::vector<Sample> load_dataset(const std::filesystem::path& path, Task task);
Sample parse_sample(const nlohmann::json& record, Task task);

// --- prompts ----------------------------------------------------------------

struct PromptTemplate {
  std::string_view system;
  std::string_view user;  // placeholders: {text} {question} {choices}
};

inline constexpr std::string_view kTemplateVersion = "v1";

const PromptTemplate& prompt_template(Task task) noexcept;
/// SHA-256 over the version tag and all four templates.
std::string template_hash();
std::vector<ChatMessage> build_messages(Task task, const Sample& sample, std::string_view body);

// --- scoring ----------------------------------------------------------------

/// Earliest whole-word occurrence of any label in the response, or empty.
std::string extract_label(std::string_view response, const std::vector<std::string>& labels);
/// Choice letter A-D as an index, or -1.
int extract_choice(std::string_view response);

// --- cost -------------------------------------------------------------------

struct CostEntry {
  std::string model_name;
  double usd_per_1m_input = 0.0;
  double usd_per_1m_output = 0.0;
};

double estimate_cost(std::int64_t input_tokens, std::int64_t output_tokens, const CostEntry& entry);

/// Built-in USD prices per million tokens for five hosted models.
std::vector<CostEntry> default_cost_table();
/// Line-delimited JSON {model, in_per_1m, out_per_1m}.
std::vector<CostEntry> load_cost_table(const std::filesystem::path& path);
const CostEntry* find_cost(const std::vector<CostEntry>& table, std::string_view model) noexcept;

// --- evaluation -------------------------------------------------------------

struct EvalRecord {
  std::string sample_id;
  Task task = Task::cls;
  std::string method;
  double k = 100.0;
  std::string prompt_full;
  std::string prompt_reduced;
  std::string response;
  std::size_t original_units = 0;
  std::size_t kept_units = 0;
  std::int64_t input_tokens_estimate = 0;
  std::int64_t output_tokens_estimate = 0;
  std::optional<std::int64_t> input_tokens_reported;
  std::optional<std::int64_t> output_tokens_reported;
  int retries = 0;
  double latency_ms = 0.0;
  std::map<std::string, double> metrics;
  std::string prediction;  // extracted label / choice / number
  std::optional<std::string> error;  // Errc name + message when the unit failed
};

struct EvalRow {
  std::string method;
  double k = 100.0;
  MetricReport report;
  std::size_t errors = 0;
  std::map<std::string, std::size_t> error_kinds;
  double mean_retention = 1.0;
  std::int64_t input_tokens = 0;   // reported where available, else estimate
  std::int64_t output_tokens = 0;
  std::int64_t input_tokens_estimate = 0;
  std::int64_t output_tokens_estimate = 0;
  std::optional<double> cost_usd;  // for the endpoint's model, if priced
  std::map<std::string, double> cost_by_model;
};

struct EvalReport {
  Task task = Task::cls;
  std::string endpoint_model;
  std::string transport;
  std::string encoder_hash;
  std::string unit;
  std::uint64_t seed = 0;
  std::vector<EvalRow> rows;
  std::vector<EvalRecord> records;

  nlohmann::json summary_json() const;   // rows + metadata, no timings
  std::string summary_hash() const;      // SHA-256 of summary_json().dump()
  nlohmann::json to_json() const;        // summary + summary_hash
};

struct EvalSpec {
  Task task = Task::cls;
  std::vector<CompressionMethod> methods;  // empty: baseline only
  std::vector<double> ks;                  // 100 is always added
  SaliencyUnit unit = SaliencyUnit::word;
  std::uint64_t seed = 0;
  int max_parallel = 4;
  RetryPolicy retry;
  std::string endpoint_model;
  std::string transport_name = "replay";
  std::vector<CostEntry> cost_table = default_cost_table();
};

/// Runs every sample x method x k unit: compress (k = 100 skips the
/// encoder), query the transport, score. Transport failures are recorded
/// per unit and excluded from the aggregates.
EvalReport run_eval(const std::vector<Sample>& dataset, const Model* model, Transport& transport,
                    const EvalSpec& spec);

/// Per-sample seed for random selection, derived from the run seed.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t sample_index) noexcept;

}  // namespace frugal
