#include "frugal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "frugal/error.hpp"
#include "frugal/hash.hpp"
#include "frugal/random.hpp"
#include "frugal/text.hpp"

namespace frugal {

using nlohmann::json;

// --- datasets ---------------------------------------------------------------

namespace {

std::string id_of(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

Sample parse_sample(const json& r, Task task) {
  Sample s;
  s.id = id_of(r.at("id"));
  switch (task) {
    case Task::cls: {
      s.body = r.at("text").get<std::string>();
      const auto& label = r.at("label");
      s.label = label.is_string() ? label.get<std::string>() : label.dump();
      break;
    }
    case Task::sum:
      s.body = r.at("document").get<std::string>();
      s.reference = r.at("reference").get<std::string>();
      break;
    case Task::qa:
      s.body = r.at("context").get<std::string>();
      s.question = r.at("question").get<std::string>();
      s.choices = r.at("choices").get<std::vector<std::string>>();
      if (s.choices.size() != 4) throw Error(Errc::parse_error, "QA records need exactly 4 choices");
      s.answer_index = r.at("answer_index").get<int>();
      if (s.answer_index < 0 || s.answer_index > 3) throw Error(Errc::parse_error, "answer_index must be 0-3");
      break;
    case Task::rsn:
      s.body = r.at("problem").get<std::string>();
      s.answer_number = r.at("answer_number").get<double>();
      break;
  }
  return s;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open dataset " + path.string());
  std::vector<Sample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      out.push_back(parse_sample(json::parse(line), task));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, where + e.what());
    } catch (const Error& e) {
      throw Error(Errc::parse_error, where + e.what());
    }
    if (!ids.insert(out.back().id).second) {
      throw Error(Errc::parse_error, where + "duplicate id " + out.back().id);
    }
  }
  if (out.empty()) throw Error(Errc::parse_error, path.string() + ": dataset is empty");
  return out;
}

// --- prompts ----------------------------------------------------------------

namespace {

constexpr PromptTemplate kClsTemplate{
    "You are a sentiment classifier for movie reviews. Some words of the review may have been "
    "removed; judge the sentiment of what remains.",
    "Review: {text}\n\nIs the sentiment of this review positive or negative? Answer with exactly "
    "one word: positive or negative."};

constexpr PromptTemplate kSumTemplate{
    "You are a news editor who writes concise, factual summaries. Some words of the article may "
    "have been removed.",
    "Article: {text}\n\nWrite a summary of the article in one to three sentences."};

constexpr PromptTemplate kQaTemplate{
    "You answer multiple-choice reading comprehension questions that require commonsense "
    "reasoning. Some words of the passage may have been removed.",
    "Passage: {text}\n\nQuestion: {question}\n\nOptions:\n{choices}\n\nReply with the letter (A, "
    "B, C or D) of the best option only."};

constexpr PromptTemplate kRsnTemplate{
    "You solve grade-school math word problems. Some words of the problem may have been removed.",
    "Problem: {text}\n\nReason briefly, then give the final numeric answer on its own line in the "
    "form '#### <number>'."};

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

const PromptTemplate& prompt_template(Task task) noexcept {
  switch (task) {
    case Task::cls: return kClsTemplate;
    case Task::sum: return kSumTemplate;
    case Task::qa: return kQaTemplate;
    case Task::rsn: return kRsnTemplate;
  }
  return kClsTemplate;
}

std::string template_hash() {
  std::string all(kTemplateVersion);
  for (auto t : {Task::cls, Task::sum, Task::qa, Task::rsn}) {
    const auto& tpl = prompt_template(t);
    all += '\0';
    all += tpl.system;
    all += '\0';
    all += tpl.user;
  }
  return sha256_hex(all);
}

std::vector<ChatMessage> build_messages(Task task, const Sample& sample, std::string_view body) {
  const auto& tpl = prompt_template(task);
  std::string user(tpl.user);
  std::string choices;
  for (std::size_t i = 0; i < sample.choices.size(); ++i) {
    if (i) choices += '\n';
    choices += static_cast<char>('A' + i);
    choices += ". ";
    choices += sample.choices[i];
  }
  // Fill {text} last so placeholder-like text inside the body is left alone.
  replace_all(user, "{question}", sample.question);
  replace_all(user, "{choices}", choices);
  replace_all(user, "{text}", body);
  return {{"system", std::string(tpl.system)}, {"user", std::move(user)}};
}

// --- scoring ----------------------------------------------------------------

std::string extract_label(std::string_view response, const std::vector<std::string>& labels) {
  const auto words = text::metric_tokens(response);
  for (const auto& w : words) {
    for (const auto& label : labels) {
      if (w == text::ascii_lower(label)) return label;
    }
  }
  return {};
}

int extract_choice(std::string_view response) {
  static const std::regex kAnswerIs(R"((?:answer|option)\s*(?:is)?\s*[:\-]?\s*\(?([A-Da-d])\b)",
                                    std::regex::icase);
  static const std::regex kLetter(R"(\b([A-D])\b)");
  const std::string s(response);
  std::smatch m;
  if (std::regex_search(s, m, kAnswerIs)) {
    return std::toupper(static_cast<unsigned char>(m[1].str()[0])) - 'A';
  }
  if (std::regex_search(s, m, kLetter)) return m[1].str()[0] - 'A';
  return -1;
}

// --- cost -------------------------------------------------------------------

double estimate_cost(std::int64_t input_tokens, std::int64_t output_tokens, const CostEntry& entry) {
  if (input_tokens < 0 || output_tokens < 0) {
    throw Error(Errc::invalid_argument, "token counts must be non-negative");
  }
  return static_cast<double>(input_tokens) * entry.usd_per_1m_input / 1e6 +
         static_cast<double>(output_tokens) * entry.usd_per_1m_output / 1e6;
}

std::vector<CostEntry> default_cost_table() {
  return {
      {"Llama-3 8B", 0.03, 0.06},
      {"Llama-3 70B", 0.30, 0.40},
      {"GPT-3.5", 0.50, 1.50},
      {"Gemini-2.0 FT", 0.10, 0.40},
      {"o3-mini", 1.10, 4.40},
  };
}

std::vector<CostEntry> load_cost_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open cost table " + path.string());
  std::vector<CostEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      CostEntry e{j.at("model").get<std::string>(), j.at("in_per_1m").get<double>(),
                  j.at("out_per_1m").get<double>()};
      if (e.usd_per_1m_input < 0 || e.usd_per_1m_output < 0) {
        throw Error(Errc::parse_error, "negative price");
      }
      out.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

const CostEntry* find_cost(const std::vector<CostEntry>& table, std::string_view model) noexcept {
  for (const auto& e : table) {
    if (e.model_name == model) return &e;
  }
  return nullptr;
}

// --- evaluation -------------------------------------------------------------

std::uint64_t sample_seed(std::uint64_t seed, std::size_t sample_index) noexcept {
  SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(sample_index) + 1)));
  return rng.next();
}

namespace {

struct Unit {
  std::size_t sample;
  std::string method;
  std::optional<CompressionMethod> compression;  // empty for the baseline
  double k;
};

std::string render(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n\n";
    out += m.content;
  }
  return out;
}

void score_record(EvalRecord& rec, const Sample& sample, Task task,
                  const std::vector<std::string>& labels) {
  switch (task) {
    case Task::cls:
      rec.prediction = extract_label(rec.response, labels);
      rec.metrics["correct"] = rec.prediction == sample.label ? 1.0 : 0.0;
      break;
    case Task::qa: {
      const int choice = extract_choice(rec.response);
      rec.prediction = choice < 0 ? "" : std::string(1, static_cast<char>('A' + choice));
      rec.metrics["correct"] = choice == sample.answer_index ? 1.0 : 0.0;
      break;
    }
    case Task::rsn: {
      const auto n = extract_final_number(rec.response);
      rec.prediction = n ? format_k(*n) : "";
      rec.metrics["pass@1"] = pass_at_1(rec.response, sample.answer_number) ? 1.0 : 0.0;
      break;
    }
    case Task::sum: {
      if (text::metric_tokens(rec.response).empty()) {
        for (auto name : {"bleu", "rouge1", "rouge2", "rougeL", "meteor"}) rec.metrics[name] = 0.0;
        break;
      }
      const auto r = rouge(rec.response, sample.reference);
      rec.metrics["bleu"] = bleu(rec.response, sample.reference);
      rec.metrics["rouge1"] = r.r1;
      rec.metrics["rouge2"] = r.r2;
      rec.metrics["rougeL"] = r.rl;
      rec.metrics["meteor"] = meteor(rec.response, sample.reference);
      break;
    }
  }
}

EvalRecord run_unit(const Unit& unit, const Sample& sample, const Model* model, Transport& transport,
                    const EvalSpec& spec, const std::vector<std::string>& labels, std::size_t unit_index) {
  EvalRecord rec;
  rec.sample_id = sample.id;
  rec.task = spec.task;
  rec.method = unit.method;
  rec.k = unit.k;
  const auto full_messages = build_messages(spec.task, sample, sample.body);
  rec.prompt_full = render(full_messages);
  try {
    std::string body = sample.body;
    rec.original_units = text::split_words(sample.body).size();
    rec.kept_units = rec.original_units;
    if (unit.compression && unit.k < 100.0) {
      FrugalizeOptions opts;
      opts.method = *unit.compression;
      opts.k = unit.k;
      opts.unit = spec.unit;
      opts.seed = sample_seed(spec.seed, unit.sample);
      const auto result = frugalize(sample.body, model, opts);
      body = result.reduced_text;
      rec.original_units = result.original_count;
      rec.kept_units = result.kept_count;
    }
    const auto messages = build_messages(spec.task, sample, body);
    rec.prompt_reduced = render(messages);
    rec.input_tokens_estimate = static_cast<std::int64_t>(text::whitespace_token_count(rec.prompt_reduced));

    CompletionRequest request{sample.id, unit.method, unit.k, messages};
    RetryPolicy retry = spec.retry;
    retry.jitter_seed = sample_seed(spec.seed ^ 0xA5A5A5A5ull, unit_index);
    const auto completion = complete(transport, request, retry);
    rec.response = completion.text;
    rec.input_tokens_reported = completion.input_tokens;
    rec.output_tokens_reported = completion.output_tokens;
    rec.output_tokens_estimate = static_cast<std::int64_t>(text::whitespace_token_count(rec.response));
    rec.retries = completion.retries;
    rec.latency_ms = completion.latency_ms;
    score_record(rec, sample, spec.task, labels);
  } catch (const Error& e) {
    rec.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return rec;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

EvalRow aggregate(const std::string& method, double k, const std::vector<const EvalRecord*>& recs,
                  const std::vector<const Sample*>& samples, const EvalSpec& spec) {
  EvalRow row;
  row.method = method;
  row.k = k;
  row.report.task = spec.task;
  std::vector<const EvalRecord*> ok;
  std::vector<const Sample*> ok_samples;
  std::vector<double> retention;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto* r = recs[i];
    if (r->error) {
      ++row.errors;
      ++row.error_kinds[r->error->substr(0, r->error->find(':'))];
      continue;
    }
    ok.push_back(r);
    ok_samples.push_back(samples[i]);
    retention.push_back(r->original_units == 0 ? 1.0
                                               : static_cast<double>(r->kept_units) /
                                                     static_cast<double>(r->original_units));
    row.input_tokens_estimate += r->input_tokens_estimate;
    row.output_tokens_estimate += r->output_tokens_estimate;
    row.input_tokens += r->input_tokens_reported.value_or(r->input_tokens_estimate);
    row.output_tokens += r->output_tokens_reported.value_or(r->output_tokens_estimate);
  }
  row.report.sample_count = ok.size();
  row.mean_retention = mean(retention);
  if (!ok.empty()) {
    auto& values = row.report.values;
    switch (spec.task) {
      case Task::cls: {
        std::vector<std::string> preds, golds;
        for (std::size_t i = 0; i < ok.size(); ++i) {
          preds.push_back(ok[i]->prediction);
          golds.push_back(ok_samples[i]->label);
        }
        const auto scores = accuracy_f1(preds, golds);
        values["accuracy"] = scores.accuracy;
        values["f1_macro"] = scores.macro_f1;
        break;
      }
      case Task::qa:
      case Task::rsn: {
        const std::string key = spec.task == Task::qa ? "correct" : "pass@1";
        std::size_t hits = 0;
        for (const auto* r : ok) hits += r->metrics.at(key) > 0.5 ? 1 : 0;
        values[spec.task == Task::qa ? "accuracy" : "pass@1"] =
            static_cast<double>(hits) / static_cast<double>(ok.size());
        break;
      }
      case Task::sum:
        for (auto name : {"bleu", "rouge1", "rouge2", "rougeL", "meteor"}) {
          std::vector<double> v;
          for (const auto* r : ok) v.push_back(r->metrics.at(name));
          values[name] = mean(v);
        }
        break;
    }
  }
  for (const auto& entry : spec.cost_table) {
    row.cost_by_model[entry.model_name] = estimate_cost(row.input_tokens, row.output_tokens, entry);
  }
  if (const auto* entry = find_cost(spec.cost_table, spec.endpoint_model)) {
    row.cost_usd = estimate_cost(row.input_tokens, row.output_tokens, *entry);
  }
  return row;
}

}  // namespace

EvalReport run_eval(const std::vector<Sample>& dataset, const Model* model, Transport& transport,
                    const EvalSpec& spec) {
  std::vector<double> ks = spec.ks;
  for (const double k : ks) retention_count(k, 1);  // range check
  ks.push_back(100.0);
  std::sort(ks.begin(), ks.end(), std::greater<>());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  std::vector<std::pair<std::string, std::optional<CompressionMethod>>> methods;
  if (spec.methods.empty()) {
    methods.emplace_back("baseline", std::nullopt);
    ks = {100.0};
  }
  for (const auto m : spec.methods) methods.emplace_back(std::string(to_string(m)), m);

  std::vector<std::string> labels;
  if (spec.task == Task::cls) {
    std::set<std::string> unique;
    for (const auto& s : dataset) unique.insert(s.label);
    labels.assign(unique.begin(), unique.end());
  }

  // Unit order fixes the aggregation order; workers may finish in any order.
  std::vector<Unit> units;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    for (const auto& [name, method] : methods) {
      for (const double k : ks) units.push_back({s, name, method, k});
    }
  }
  std::vector<EvalRecord> records(units.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      records[i] = run_unit(units[i], dataset[units[i].sample], model, transport, spec, labels, i);
    }
  };
  {
    const auto threads = static_cast<std::size_t>(std::max(1, spec.max_parallel));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < std::min(threads, units.size()); ++t) pool.emplace_back(worker);
    worker();
  }

  EvalReport report;
  report.task = spec.task;
  report.endpoint_model = spec.endpoint_model;
  report.transport = spec.transport_name;
  report.encoder_hash = model ? model_hash(model->bundle) : "";
  report.unit = std::string(to_string(spec.unit));
  report.seed = spec.seed;
  for (const auto& [name, method] : methods) {
    for (const double k : ks) {
      std::vector<const EvalRecord*> recs;
      std::vector<const Sample*> samples;
      for (std::size_t i = 0; i < units.size(); ++i) {
        if (units[i].method == name && units[i].k == k) {
          recs.push_back(&records[i]);
          samples.push_back(&dataset[units[i].sample]);
        }
      }
      report.rows.push_back(aggregate(name, k, recs, samples, spec));
    }
  }
  report.records = std::move(records);
  return report;
}

json EvalReport::summary_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row{{"method", r.method},
             {"k", r.k},
             {"metrics", r.report.values},
             {"scored", r.report.sample_count},
             {"errors", r.errors},
             {"error_kinds", r.error_kinds},
             {"mean_retention", r.mean_retention},
             {"input_tokens", r.input_tokens},
             {"output_tokens", r.output_tokens},
             {"input_tokens_estimate", r.input_tokens_estimate},
             {"output_tokens_estimate", r.output_tokens_estimate},
             {"cost_by_model", r.cost_by_model}};
    row["cost_usd"] = r.cost_usd ? json(*r.cost_usd) : json(nullptr);
    rows_json.push_back(std::move(row));
  }
  return json{{"task", std::string(to_string(task))},
              {"endpoint_model", endpoint_model},
              {"transport", transport},
              {"encoder_hash", encoder_hash},
              {"unit", unit},
              {"seed", seed},
              {"template_version", std::string(kTemplateVersion)},
              {"template_hash", template_hash()},
              {"f1_averaging", "macro"},
              {"rows", std::move(rows_json)}};
}

std::string EvalReport::summary_hash() const { return sha256_hex(summary_json().dump()); }

json EvalReport::to_json() const {
  auto j = summary_json();
  j["summary_hash"] = summary_hash();
  return j;
}

}  // namespace frugal
