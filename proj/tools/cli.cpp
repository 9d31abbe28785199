#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "frugal/attribution.hpp"
#include "frugal/compression.hpp"
#include "frugal/encoder.hpp"
#include "frugal/error.hpp"
#include "frugal/harness.hpp"
#include "frugal/random.hpp"
#include "frugal/tokenizer.hpp"
#include "frugal/transport.hpp"

namespace frugal::cli {

namespace {

using nlohmann::json;

/// Raised for bad flag values that CLI11 cannot check by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFlags {
  std::string model;
  std::string vocab;  // defaults to vocab.txt next to the model
};

Model load(const ModelFlags& f) {
  const std::filesystem::path model_path(f.model);
  const std::filesystem::path vocab_path =
      f.vocab.empty() ? model_path.parent_path() / "vocab.txt" : std::filesystem::path(f.vocab);
  Model m{load_model(model_path), load_vocab(vocab_path)};
  if (static_cast<std::size_t>(m.bundle.config.vocab_size) != m.vocab.size()) {
    throw Error(Errc::shape_mismatch, "model expects " + std::to_string(m.bundle.config.vocab_size) +
                                          " vocabulary entries, " + vocab_path.string() + " has " +
                                          std::to_string(m.vocab.size()));
  }
  return m;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_k(const std::string& s) {
  double k = 0.0;
  try {
    std::size_t used = 0;
    k = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw UsageError("k must be a number, got '" + s + "'");
  }
  if (!(k > 0.0 && k <= 100.0)) throw UsageError("k must lie in (0, 100], got " + s);
  return k;
}

template <class Enum>
Enum parse_or_usage(std::optional<Enum> parsed, const std::string& what, const std::string& value) {
  if (!parsed) throw UsageError("unknown " + what + " '" + value + "'");
  return *parsed;
}

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty() || path == "-") return fallback;
  file.open(path);
  if (!file) throw Error(Errc::missing_file, "cannot write " + path);
  return file;
}

// --- attribute --------------------------------------------------------------

struct AttributeArgs {
  ModelFlags model;
  std::string text;
  std::string input;
  std::string method = "globenc";
  std::string unit = "word";
  std::string mode;
  std::optional<int> target;
  bool magnitude = false;
  std::string pooling = "mean";
  std::string output;
};

int cmd_attribute(const AttributeArgs& a, std::ostream& out) {
  const auto method = parse_or_usage(parse_attribution_method(a.method), "method", a.method);
  ScoringOptions opts;
  opts.unit = parse_or_usage(parse_unit(a.unit), "unit", a.unit);
  if (!a.mode.empty()) opts.mode = parse_or_usage(parse_reduction_mode(a.mode), "mode", a.mode);
  if (a.pooling != "mean" && a.pooling != "max") throw UsageError("unknown pooling '" + a.pooling + "'");
  opts.pooling = a.pooling == "max" ? WordPooling::max : WordPooling::mean;
  opts.sign = a.magnitude ? ScoreSign::magnitude : ScoreSign::signed_score;
  opts.target = a.target;

  std::string text = a.text;
  if (!a.input.empty()) {
    std::ifstream in(a.input);
    if (!in) throw Error(Errc::missing_file, "cannot open " + a.input);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  const auto model = load(a.model);
  const auto scored = score_text(text, model, method, opts);

  json tokens = json::array();
  if (opts.unit == SaliencyUnit::word) {
    for (std::size_t w = 0; w < scored.input.word_count(); ++w) tokens.push_back(scored.input.word(w));
  } else {
    for (std::size_t t = 0; t < scored.input.size(); ++t) {
      if (!scored.input.special_mask[t]) tokens.push_back(scored.input.token_strings[t]);
    }
  }
  json dump{{"model_hash", model_hash(model.bundle)},
            {"method", std::string(to_string(method))},
            {"unit", std::string(to_string(opts.unit))},
            {"chunks", scored.chunks},
            {"tokens", std::move(tokens)},
            {"scores", scored.saliency.scores}};
  dump["mode"] = method == AttributionMethod::decompx
                     ? json(nullptr)
                     : json(std::string(to_string(opts.mode.value_or(ReductionMode::cls_row))));
  dump["target_class"] = method == AttributionMethod::decompx ? json(scored.saliency.target_class)
                                                              : json(nullptr);
  std::ofstream file;
  open_output(a.output, file, out) << dump.dump(2) << '\n';
  return kOk;
}

// --- compress ---------------------------------------------------------------

struct CompressArgs {
  ModelFlags model;
  std::string input;
  std::string field = "text";
  std::string method = "globenc";
  std::string k = "80";
  std::string unit = "word";
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_compress(const CompressArgs& a, std::ostream& out, std::ostream& err) {
  FrugalizeOptions opts;
  opts.method = parse_or_usage(parse_compression_method(a.method), "method", a.method);
  opts.k = parse_k(a.k);
  opts.unit = parse_or_usage(parse_unit(a.unit), "unit", a.unit);

  std::optional<Model> model;
  if (opts.method != CompressionMethod::random || opts.unit == SaliencyUnit::subword) {
    if (a.model.model.empty()) throw UsageError("--model is required for method " + a.method);
    model = load(a.model);
  } else if (!a.model.model.empty()) {
    model = load(a.model);
  }

  std::ifstream in(a.input);
  if (!in) throw Error(Errc::missing_file, "cannot open " + a.input);
  std::ofstream file;
  auto& sink = open_output(a.output, file, out);

  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  double retention = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = a.input + ":" + std::to_string(line_no) + ": ";
    json rec;
    std::string text;
    try {
      rec = json::parse(line);
      text = rec.at(a.field).get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, where + e.what());
    }
    opts.seed = sample_seed(a.seed, records);
    CompressionResult r;
    try {
      r = frugalize(text, model ? &*model : nullptr, opts);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    json o;
    if (rec.contains("id")) o["id"] = rec["id"];
    o["reduced_text"] = r.reduced_text;
    o["kept_indices"] = r.kept_indices;
    o["k"] = r.k;
    o["p"] = r.p;
    o["method"] = std::string(to_string(r.method));
    o["unit"] = std::string(to_string(r.unit));
    o["original_count"] = r.original_count;
    o["kept_count"] = r.kept_count;
    sink << o.dump() << '\n';
    retention += r.original_count ? static_cast<double>(r.kept_count) / static_cast<double>(r.original_count) : 1.0;
    ++records;
  }
  err << "compressed " << records << " records; mean retention "
      << std::setprecision(6) << (records ? retention / static_cast<double>(records) : 0.0) << '\n';
  return kOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string task;
  std::string dataset;
  ModelFlags model;
  std::string methods;
  std::string ks = "100";
  std::string endpoint_config;
  std::string replay;
  std::string report;
  std::string records;
  std::string unit = "word";
  std::string cost_table;
  std::string model_name;
  std::uint64_t seed = 0;
  int parallel = 0;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  EvalSpec spec;
  spec.task = parse_or_usage(parse_task(a.task), "task", a.task);
  spec.unit = parse_or_usage(parse_unit(a.unit), "unit", a.unit);
  spec.seed = a.seed;
  for (const auto& m : split_list(a.methods)) {
    spec.methods.push_back(parse_or_usage(parse_compression_method(m), "method", m));
  }
  for (const auto& k : split_list(a.ks)) spec.ks.push_back(parse_k(k));

  const bool needs_model = std::any_of(spec.methods.begin(), spec.methods.end(), [&](CompressionMethod m) {
    return m != CompressionMethod::random || spec.unit == SaliencyUnit::subword;
  });
  if (needs_model && a.model.model.empty()) throw UsageError("--model is required for attribution methods");
  if (a.replay.empty() && a.endpoint_config.empty()) {
    throw UsageError("one of --replay or --endpoint-config is required");
  }

  EndpointConfig endpoint;
  endpoint.transport = TransportKind::replay;
  if (!a.endpoint_config.empty()) endpoint = load_endpoint_config(a.endpoint_config);
  if (!a.replay.empty()) {
    endpoint.transport = TransportKind::replay;
    endpoint.replay_path = a.replay;
  }
  if (!a.model_name.empty()) endpoint.model_name = a.model_name;

  std::unique_ptr<Transport> transport;
  if (endpoint.transport == TransportKind::replay) {
    transport = std::make_unique<ReplayTransport>(ReplayTransport::from_file(endpoint.replay_path));
    spec.transport_name = "replay";
  } else {
    // Fail before loading anything else or sending a single request.
    if (endpoint.api_key.empty()) {
      throw Error(Errc::missing_api_key, "environment variable " + endpoint.api_key_env + " is not set");
    }
    transport = std::make_unique<HttpTransport>(endpoint);
    spec.transport_name = "http";
  }
  spec.endpoint_model = endpoint.model_name;
  spec.max_parallel = a.parallel > 0 ? a.parallel : endpoint.max_parallel;
  spec.retry.max_retries = endpoint.max_retries;
  spec.retry.base = endpoint.backoff_base;
  spec.retry.factor = endpoint.backoff_factor;
  if (!a.cost_table.empty()) spec.cost_table = load_cost_table(a.cost_table);

  const auto dataset = load_dataset(a.dataset, spec.task);
  std::optional<Model> model;
  if (!a.model.model.empty()) model = load(a.model);

  const auto report = run_eval(dataset, model ? &*model : nullptr, *transport, spec);

  std::ofstream file;
  open_output(a.report, file, out) << report.to_json().dump(2) << '\n';
  if (!a.records.empty()) {
    std::ofstream rec_out(a.records);
    if (!rec_out) throw Error(Errc::missing_file, "cannot write " + a.records);
    for (const auto& r : report.records) {
      json j{{"id", r.sample_id},
             {"task", std::string(to_string(r.task))},
             {"method", r.method},
             {"k", r.k},
             {"prompt_full", r.prompt_full},
             {"prompt_reduced", r.prompt_reduced},
             {"response", r.response},
             {"prediction", r.prediction},
             {"metrics", r.metrics},
             {"original_units", r.original_units},
             {"kept_units", r.kept_units},
             {"input_tokens_estimate", r.input_tokens_estimate},
             {"output_tokens_estimate", r.output_tokens_estimate},
             {"retries", r.retries},
             {"latency_ms", r.latency_ms}};
      j["input_tokens_reported"] = r.input_tokens_reported ? json(*r.input_tokens_reported) : json(nullptr);
      j["output_tokens_reported"] = r.output_tokens_reported ? json(*r.output_tokens_reported) : json(nullptr);
      j["error"] = r.error ? json(*r.error) : json(nullptr);
      rec_out << j.dump() << '\n';
    }
  }

  std::size_t scored = 0;
  std::size_t failed = 0;
  for (const auto& row : report.rows) {
    scored += row.report.sample_count;
    failed += row.errors;
  }
  err << "scored " << scored << " units, " << failed << " failed; summary " << report.summary_hash() << '\n';
  for (const auto& row : report.rows) {
    for (const auto& [kind, n] : row.error_kinds) {
      err << "  " << row.method << " k=" << format_k(row.k) << ": " << n << " x " << kind << '\n';
    }
  }
  return scored > 0 ? kOk : kData;
}

// --- cost -------------------------------------------------------------------

struct CostArgs {
  std::string model_name;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::string cost_table;
};

int cmd_cost(const CostArgs& a, std::ostream& out) {
  const auto table = a.cost_table.empty() ? default_cost_table() : load_cost_table(a.cost_table);
  std::vector<const CostEntry*> rows;
  if (a.model_name.empty()) {
    for (const auto& e : table) rows.push_back(&e);
  } else if (const auto* e = find_cost(table, a.model_name)) {
    rows.push_back(e);
  } else {
    throw Error(Errc::invalid_argument, "no price for model '" + a.model_name + "'");
  }
  for (const auto* e : rows) {
    out << e->model_name << '\t' << std::fixed << std::setprecision(6)
        << estimate_cost(a.input_tokens, a.output_tokens, *e) << '\n';
  }
  return kOk;
}

// --- selfcheck --------------------------------------------------------------

struct SelfcheckArgs {
  std::string model;
  int trials = 100;
  std::uint64_t seed = 0;
  std::string inject;  // test hook
};

constexpr double kReconstructionTolerance = 1e-5;
constexpr double kStochasticTolerance = 1e-6;

double worst_row_deviation(const Matrix& m) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    worst = std::max(worst, std::abs(m.row(i).sum() - 1.0));
    if (m.row(i).minCoeff() < 0.0) worst = std::max(worst, -m.row(i).minCoeff());
  }
  return worst;
}

int cmd_selfcheck(const SelfcheckArgs& a, std::ostream& out) {
  if (a.trials < 1) throw UsageError("--trials must be at least 1");
  if (!a.inject.empty() && a.inject != "ln-gamma") throw UsageError("unknown fault '" + a.inject + "'");
  const auto bundle = load_model(a.model);

  // The decomposition sees a copy so an injected fault desynchronises it
  // from the traced forward pass.
  auto decomp_bundle = bundle;
  if (a.inject == "ln-gamma") {
    for (auto& layer : decomp_bundle.layers) layer.attention_norm.gamma *= 1.5;
  }

  const auto& cfg = bundle.config;
  SplitMix64 rng(a.seed);
  const auto max_len = static_cast<std::uint64_t>(std::min(cfg.max_positions, 16));
  DecompOptions opts;
  opts.abort_tolerance = std::numeric_limits<double>::infinity();

  double worst_reconstruction = 0.0;
  double worst_stochastic = 0.0;
  int failures = 0;
  for (int t = 0; t < a.trials; ++t) {
    const auto n = 1 + rng.below(max_len);
    std::vector<std::int32_t> ids(n);
    for (auto& id : ids) id = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.vocab_size)));
    const auto trace = forward(bundle, ids);

    const auto d = decompose(trace, decomp_bundle, opts);
    const double err = std::isfinite(d.max_error()) ? d.max_error() : std::numeric_limits<double>::infinity();
    const double stochastic = std::max(worst_row_deviation(attention_rollout(trace).values),
                                       worst_row_deviation(globenc(trace, bundle).values));
    worst_reconstruction = std::max(worst_reconstruction, err);
    worst_stochastic = std::max(worst_stochastic, stochastic);
    if (!(err <= kReconstructionTolerance) || !(stochastic <= kStochasticTolerance)) ++failures;
  }
  out << "trials " << a.trials << ", failures " << failures << '\n'
      << "worst reconstruction error " << std::scientific << std::setprecision(3) << worst_reconstruction << '\n'
      << "worst row-sum deviation " << worst_stochastic << '\n'
      << (failures == 0 ? "PASS" : "FAIL") << '\n';
  return failures == 0 ? kOk : kConsistency;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::consistency_failure: return kConsistency;
    default: return kData;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prompt compression by encoder token attribution", "frugalprompt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "frugalprompt 0.1.0");

  const auto add_model = [](CLI::App* cmd, ModelFlags& f, bool required) {
    auto* opt = cmd->add_option("--model", f.model, "Encoder container file");
    if (required) opt->required();
    cmd->add_option("--vocab", f.vocab, "Vocabulary file (default: vocab.txt beside the model)");
  };

  AttributeArgs attr;
  auto* attribute = app.add_subcommand("attribute", "Dump per-token attribution scores");
  add_model(attribute, attr.model, true);
  auto* text_opt = attribute->add_option("--text", attr.text, "Input text");
  auto* input_opt = attribute->add_option("--input", attr.input, "File holding the input text");
  text_opt->excludes(input_opt);
  attribute->add_option("--method", attr.method, "rollout | globenc | decompx")->capture_default_str();
  attribute->add_option("--unit", attr.unit, "word | subword")->capture_default_str();
  attribute->add_option("--mode", attr.mode, "cls_row | column_sum (matrix methods)");
  attribute->add_option("--target", attr.target, "Class scored by decompx (default: predicted)");
  attribute->add_flag("--magnitude", attr.magnitude, "Use absolute decompx contributions");
  attribute->add_option("--pooling", attr.pooling, "Subword-to-word pooling: mean | max")->capture_default_str();
  attribute->add_option("--output", attr.output, "Output file (default: stdout)");

  CompressArgs comp;
  auto* compress = app.add_subcommand("compress", "Compress every record of a JSONL file");
  add_model(compress, comp.model, false);
  compress->add_option("--input", comp.input, "JSONL input")->required();
  compress->add_option("--field", comp.field, "Text field of each record")->capture_default_str();
  compress->add_option("--method", comp.method, "globenc | decompx | rollout | random | bottom_globenc | bottom_decompx")
      ->capture_default_str();
  compress->add_option("--k", comp.k, "Percentage of units kept, in (0, 100]")->capture_default_str();
  compress->add_option("--unit", comp.unit, "word | subword")->capture_default_str();
  compress->add_option("--seed", comp.seed, "Seed for random selection")->capture_default_str();
  compress->add_option("--output", comp.output, "JSONL output (default: stdout)");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Run a method x k grid against an LLM endpoint");
  evaluate->add_option("--task", eval.task, "CLS | SUM | QA | RSN")->required();
  evaluate->add_option("--dataset", eval.dataset, "JSONL dataset")->required();
  add_model(evaluate, eval.model, false);
  evaluate->add_option("--methods", eval.methods, "Comma-separated compression methods (empty: baseline only)");
  evaluate->add_option("--ks", eval.ks, "Comma-separated retention percentages")->capture_default_str();
  evaluate->add_option("--endpoint-config", eval.endpoint_config, "Endpoint JSON config");
  evaluate->add_option("--replay", eval.replay, "Replay JSONL; overrides the configured transport");
  evaluate->add_option("--report", eval.report, "Report file (default: stdout)");
  evaluate->add_option("--records", eval.records, "Per-unit JSONL records");
  evaluate->add_option("--unit", eval.unit, "word | subword")->capture_default_str();
  evaluate->add_option("--cost-table", eval.cost_table, "JSONL price table");
  evaluate->add_option("--model-name", eval.model_name, "Inference model name (overrides the config)");
  evaluate->add_option("--seed", eval.seed, "Run seed")->capture_default_str();
  evaluate->add_option("--parallel", eval.parallel, "Concurrent requests (default: from config)");

  CostArgs cost;
  auto* cost_cmd = app.add_subcommand("cost", "Price a token count");
  cost_cmd->add_option("--model-name", cost.model_name, "Model to price (default: all)");
  cost_cmd->add_option("--input-tokens", cost.input_tokens)->check(CLI::NonNegativeNumber);
  cost_cmd->add_option("--output-tokens", cost.output_tokens)->check(CLI::NonNegativeNumber);
  cost_cmd->add_option("--cost-table", cost.cost_table, "JSONL price table");

  SelfcheckArgs check;
  auto* selfcheck = app.add_subcommand("selfcheck", "Randomised reconstruction and row-sum checks");
  selfcheck->add_option("--model", check.model, "Encoder container file")->required();
  selfcheck->add_option("--trials", check.trials)->capture_default_str();
  selfcheck->add_option("--seed", check.seed)->capture_default_str();
  selfcheck->add_option("--inject-fault", check.inject)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kOk;
    err << "usage: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*attribute) return cmd_attribute(attr, out);
    if (*compress) return cmd_compress(comp, out, err);
    if (*evaluate) return cmd_evaluate(eval, out, err);
    if (*cost_cmd) return cmd_cost(cost, out);
    if (*selfcheck) return cmd_selfcheck(check, out);
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace frugal::cli
