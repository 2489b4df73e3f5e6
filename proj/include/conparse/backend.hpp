#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace conparse {

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model_id;

  // Throws std::invalid_argument on a negative temperature or max_tokens < 1.
  void validate() const;
};

enum class FinishReason { Stop, Length, Error };
std::string_view to_string(FinishReason reason);
FinishReason parse_finish_reason(std::string_view name);

struct CompletionResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;

  bool operator==(const CompletionResponse&) const = default;
};

enum class BackendErrorKind { Timeout, RateLimited, AuthFailure, UnmappedPrompt, Transport, BadResponse };
std::string_view to_string(BackendErrorKind kind);
BackendErrorKind parse_backend_error_kind(std::string_view name);

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  BackendErrorKind kind() const { return kind_; }

 private:
  BackendErrorKind kind_;
};

// Implementations must tolerate concurrent calls to complete().
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

std::string sha256_hex(std::string_view data);

// ---- HTTP ----

struct HttpConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::string model = "gpt-3.5-turbo";
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{60000};

  // CONPARSE_API_BASE, CONPARSE_API_KEY, CONPARSE_MODEL override the defaults.
  static HttpConfig from_env();
};

// POST {base_url}/chat/completions. Timeouts, 429 and 5xx are retried with
// exponential backoff; 401/403 fail at once.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  CompletionResponse complete(const CompletionRequest& request) override;
  const HttpConfig& config() const { return config_; }

 private:
  HttpConfig config_;
  std::string host_;
  std::string path_prefix_;
};

// ---- scripted replay ----

// Each script line is {"prompt_sha256": hex | "*", "prompt": optional text,
// "responses": [...]}. A response is a string, {"text", "finish_reason"}, or
// {"error": kind} to simulate a failure. Successive calls with the same prompt
// walk the list and repeat its last entry once exhausted. "*" answers any
// prompt without an entry of its own.
class ScriptedBackend : public Backend {
 public:
  struct Entry {
    std::vector<nlohmann::json> responses;
    std::size_t cursor = 0;
  };

  ScriptedBackend() = default;
  ScriptedBackend(ScriptedBackend&& other) noexcept;
  static ScriptedBackend from_jsonl(std::string_view text);
  static ScriptedBackend load(const std::string& path);

  void add(const std::string& prompt_sha256, std::vector<nlohmann::json> responses);
  void add_prompt(std::string_view prompt, std::vector<std::string> responses);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
  std::size_t calls_ = 0;
};

// ---- logging and throttling ----

struct LogEntry {
  CompletionRequest request;
  CompletionResponse response;
};

class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}
  CompletionResponse complete(const CompletionRequest& request) override;

  std::vector<LogEntry> entries() const;
  // Script JSONL that replays the recorded responses in call order.
  std::string to_script() const;

 private:
  Backend& inner_;
  mutable std::mutex mu_;
  std::vector<LogEntry> log_;
};

class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(std::size_t limit);
  void acquire();
  void release();
  std::size_t limit() const { return limit_; }

 private:
  std::size_t limit_;
  std::size_t in_use_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

// At most `limit` requests reach `inner` at once.
class LimitedBackend : public Backend {
 public:
  LimitedBackend(Backend& inner, std::size_t limit) : inner_(inner), limiter_(limit) {}
  CompletionResponse complete(const CompletionRequest& request) override;

 private:
  Backend& inner_;
  ConcurrencyLimiter limiter_;
};

}  // namespace conparse
