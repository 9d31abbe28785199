#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace frugal {

enum class TransportKind { http, replay };

struct EndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string api_key;  // resolved from api_key_env, never read from the file
  std::string model_name;
  double temperature = 1.0;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  TransportKind transport = TransportKind::http;
  std::filesystem::path replay_path;
  int max_parallel = 4;
  std::chrono::milliseconds backoff_base{1000};
  double backoff_factor = 2.0;

  /// Throws Error{invalid_argument}.
  void validate() const;
};

/// JSON object with the field names above (timeouts in seconds). The API key
/// itself is read from the environment variable named by `api_key_env`.
EndpointConfig load_endpoint_config(const std::filesystem::path& path);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct CompletionRequest {
  std::string sample_id;
  std::string method;
  double k = 100.0;
  std::vector<ChatMessage> messages;
};

struct Completion {
  std::string text;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
  int retries = 0;
  double latency_ms = 0.0;
};

/// Raised by a transport for failures worth retrying (HTTP 429/5xx,
/// connection errors, timeouts).
class TransientFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One attempt at a completion. Permanent failures throw frugal::Error.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Completion send(const CompletionRequest& request) = 0;
};

/// Chat-completions over HTTP(S) with bearer auth; see docs/wire_protocol.md.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(EndpointConfig config);
  Completion send(const CompletionRequest& request) override;

  /// Request body exactly as sent on the wire.
  static std::string request_body(const EndpointConfig& config, const CompletionRequest& request);
  /// Throws Error{parse_error} on a malformed body.
  static Completion parse_response(const std::string& body);

 private:
  EndpointConfig config_;
  std::string origin_;
  std::string path_;
};

struct ReplayEntry {
  std::string response;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
};

/// Canned responses keyed by (sample id, method, k). A k=100 lookup falls
/// back to method "baseline" when no method-specific record exists.
class ReplayTransport final : public Transport {
 public:
  /// Line-delimited JSON {id, method, k, response, input_tokens?, output_tokens?}.
  static ReplayTransport from_file(const std::filesystem::path& path);

  void add(const std::string& id, const std::string& method, double k, ReplayEntry entry);
  Completion send(const CompletionRequest& request) override;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::tuple<std::string, std::string, std::string>, ReplayEntry> entries_;
};

/// Canonical text form of k used in keys and reports ("80", "12.5").
std::string format_k(double k);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  std::uint64_t jitter_seed = 0;
  Sleeper sleep;  // defaults to std::this_thread::sleep_for
};

/// Delay before retry number `attempt` (0-based): base * factor^attempt,
/// scaled by 0.5 + 0.5 * unit_draw with unit_draw in [0, 1).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, double unit_draw);

/// Sends with exponential backoff on TransientFailure. Throws
/// Error{transport_exhausted} once retries run out; other errors propagate
/// immediately.
Completion complete(Transport& transport, const CompletionRequest& request, const RetryPolicy& policy);

}  // namespace frugal
