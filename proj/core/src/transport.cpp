#include "frugal/transport.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "frugal/error.hpp"
#include "frugal/random.hpp"

namespace frugal {

using nlohmann::json;

void EndpointConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(Errc::invalid_argument, msg); };
  if (!(temperature >= 0.0)) fail("temperature must be >= 0");
  if (max_retries < 0) fail("max_retries must be >= 0");
  if (max_parallel < 1) fail("max_parallel must be >= 1");
  if (timeout.count() <= 0) fail("timeout must be positive");
  if (backoff_factor < 1.0) fail("backoff_factor must be >= 1");
  if (transport == TransportKind::replay && replay_path.empty()) fail("replay transport needs replay_path");
}

EndpointConfig load_endpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open endpoint config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, "endpoint config " + path.string() + ": " + e.what());
  }
  EndpointConfig cfg;
  try {
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.model_name = j.value("model", cfg.model_name);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.max_parallel = j.value("max_parallel", cfg.max_parallel);
    cfg.backoff_factor = j.value("backoff_factor", cfg.backoff_factor);
    if (j.contains("timeout_seconds")) {
      cfg.timeout = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(j.at("timeout_seconds").get<double>() * 1000.0)));
    }
    if (j.contains("backoff_base_seconds")) {
      cfg.backoff_base = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(j.at("backoff_base_seconds").get<double>() * 1000.0)));
    }
    const auto transport = j.value("transport", std::string("http"));
    if (transport == "http") {
      cfg.transport = TransportKind::http;
    } else if (transport == "replay") {
      cfg.transport = TransportKind::replay;
    } else {
      throw Error(Errc::parse_error, "unknown transport '" + transport + "'");
    }
    if (j.contains("replay_path")) {
      std::filesystem::path replay = j.at("replay_path").get<std::string>();
      cfg.replay_path = replay.is_relative() ? path.parent_path() / replay : replay;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, "endpoint config " + path.string() + ": " + e.what());
  }
  if (const char* key = std::getenv(cfg.api_key_env.c_str())) cfg.api_key = key;
  cfg.validate();
  return cfg;
}

std::string format_k(double k) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, k);
  return std::string(buf, res.ptr);
}

// --- HTTP -------------------------------------------------------------------

HttpTransport::HttpTransport(EndpointConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::invalid_argument, "base_url needs a scheme: " + url);
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

std::string HttpTransport::request_body(const EndpointConfig& config, const CompletionRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body{{"model", config.model_name}, {"messages", std::move(messages)},
            {"temperature", config.temperature}};
  return body.dump();
}

Completion HttpTransport::parse_response(const std::string& body) {
  Completion out;
  try {
    const auto j = json::parse(body);
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& usage = j["usage"];
      if (usage.contains("prompt_tokens")) out.input_tokens = usage["prompt_tokens"].get<std::int64_t>();
      if (usage.contains("completion_tokens")) {
        out.output_tokens = usage["completion_tokens"].get<std::int64_t>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed chat-completion response: ") + e.what());
  }
  return out;
}

Completion HttpTransport::send(const CompletionRequest& request) {
  if (config_.api_key.empty()) {
    throw Error(Errc::missing_api_key, "environment variable " + config_.api_key_env + " is not set");
  }
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
  auto res = client.Post(path_, headers, request_body(config_, request), "application/json");
  if (!res) {
    throw TransientFailure("connection failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 200) return parse_response(res->body);
  if (status == 429 || status >= 500) {
    throw TransientFailure("HTTP " + std::to_string(status));
  }
  if (status == 401 || status == 403) {
    throw Error(Errc::auth_failure, "HTTP " + std::to_string(status) + " from " + origin_);
  }
  throw Error(Errc::request_rejected, "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200));
}

// --- replay -----------------------------------------------------------------

namespace {

std::string id_string(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

ReplayTransport ReplayTransport::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open replay file " + path.string());
  ReplayTransport replay;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      ReplayEntry entry{j.at("response").get<std::string>(), std::nullopt, std::nullopt};
      if (j.contains("input_tokens") && !j["input_tokens"].is_null()) {
        entry.input_tokens = j["input_tokens"].get<std::int64_t>();
      }
      if (j.contains("output_tokens") && !j["output_tokens"].is_null()) {
        entry.output_tokens = j["output_tokens"].get<std::int64_t>();
      }
      replay.add(id_string(j.at("id")), j.at("method").get<std::string>(), j.at("k").get<double>(),
                 std::move(entry));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return replay;
}

void ReplayTransport::add(const std::string& id, const std::string& method, double k, ReplayEntry entry) {
  entries_[{id, method, format_k(k)}] = std::move(entry);
}

Completion ReplayTransport::send(const CompletionRequest& request) {
  const auto k = format_k(request.k);
  auto it = entries_.find({request.sample_id, request.method, k});
  if (it == entries_.end() && request.k >= 100.0) {
    it = entries_.find({request.sample_id, "baseline", k});
  }
  if (it == entries_.end()) {
    throw Error(Errc::replay_miss, "no replay record for (id=" + request.sample_id +
                                       ", method=" + request.method + ", k=" + k + ")");
  }
  Completion out;
  out.text = it->second.response;
  out.input_tokens = it->second.input_tokens;
  out.output_tokens = it->second.output_tokens;
  return out;
}

// --- retries ----------------------------------------------------------------

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, double unit_draw) {
  const double base = static_cast<double>(policy.base.count()) * std::pow(policy.factor, attempt);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(base * (0.5 + 0.5 * unit_draw))));
}

Completion complete(Transport& transport, const CompletionRequest& request, const RetryPolicy& policy) {
  const auto started = std::chrono::steady_clock::now();
  SplitMix64 jitter(policy.jitter_seed);
  for (int attempt = 0;; ++attempt) {
    try {
      Completion out = transport.send(request);
      out.retries = attempt;
      out.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      return out;
    } catch (const TransientFailure& e) {
      if (attempt >= policy.max_retries) {
        throw Error(Errc::transport_exhausted, "gave up after " + std::to_string(attempt + 1) +
                                                   " attempts: " + e.what());
      }
      const auto delay = backoff_delay(policy, attempt, jitter.uniform());
      if (policy.sleep) {
        policy.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

}  // namespace frugal
