#include "conparse/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

namespace conparse {

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

CompletionResponse response_from_json(const nlohmann::json& r) {
  if (r.is_string()) return {r.get<std::string>(), FinishReason::Stop};
  if (!r.is_object()) throw BackendError(BackendErrorKind::BadResponse, "script response must be a string or object");
  if (r.contains("error")) {
    const std::string kind = r.at("error").get<std::string>();
    throw BackendError(parse_backend_error_kind(kind), "scripted failure: " + kind);
  }
  CompletionResponse out;
  out.text = r.at("text").get<std::string>();
  if (r.contains("finish_reason")) out.finish_reason = parse_finish_reason(r.at("finish_reason").get<std::string>());
  return out;
}

}  // namespace

void CompletionRequest::validate() const {
  if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "?";
}

FinishReason parse_finish_reason(std::string_view name) {
  if (name == "length") return FinishReason::Length;
  if (name == "error") return FinishReason::Error;
  return FinishReason::Stop;
}

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::Timeout: return "Timeout";
    case BackendErrorKind::RateLimited: return "RateLimited";
    case BackendErrorKind::AuthFailure: return "AuthFailure";
    case BackendErrorKind::UnmappedPrompt: return "UnmappedPrompt";
    case BackendErrorKind::Transport: return "Transport";
    case BackendErrorKind::BadResponse: return "BadResponse";
  }
  return "?";
}

BackendErrorKind parse_backend_error_kind(std::string_view name) {
  for (auto k : {BackendErrorKind::Timeout, BackendErrorKind::RateLimited, BackendErrorKind::AuthFailure,
                 BackendErrorKind::UnmappedPrompt, BackendErrorKind::Transport, BackendErrorKind::BadResponse}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown backend error kind '" + std::string(name) + "'");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

// ---- HTTP ----

HttpConfig HttpConfig::from_env() {
  HttpConfig c;
  c.base_url = env_or("CONPARSE_API_BASE", c.base_url);
  c.api_key = env_or("CONPARSE_API_KEY", c.api_key);
  c.model = env_or("CONPARSE_MODEL", c.model);
  return c;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("base URL needs a scheme: " + config_.base_url);
  const auto slash = url.find('/', scheme + 3);
  host_ = url.substr(0, slash);
  path_prefix_ = slash == std::string::npos ? "" : url.substr(slash);
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  const nlohmann::json body = {
      {"model", request.model_id.empty() ? config_.model : request.model_id},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  const std::string payload = body.dump();

  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  BackendErrorKind last_kind = BackendErrorKind::Transport;
  std::string last_message;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.initial_backoff * (1 << (attempt - 1)));

    auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last_kind = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ? BackendErrorKind::Timeout
                                                                                         : BackendErrorKind::Transport;
      last_message = "request failed: " + httplib::to_string(err);
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw BackendError(BackendErrorKind::AuthFailure, "authentication rejected (HTTP " +
                                                            std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      last_kind = BackendErrorKind::RateLimited;
      last_message = "rate limited (HTTP 429)";
      continue;
    }
    if (res->status >= 500) {
      last_kind = BackendErrorKind::Transport;
      last_message = "server error (HTTP " + std::to_string(res->status) + ")";
      continue;
    }
    if (res->status != 200) {
      throw BackendError(BackendErrorKind::BadResponse, "unexpected HTTP " + std::to_string(res->status));
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      const auto& choice = reply.at("choices").at(0);
      CompletionResponse out;
      out.text = choice.at("message").at("content").get<std::string>();
      if (choice.contains("finish_reason") && choice.at("finish_reason").is_string()) {
        out.finish_reason = parse_finish_reason(choice.at("finish_reason").get<std::string>());
      }
      return out;
    } catch (const std::exception& e) {
      throw BackendError(BackendErrorKind::BadResponse, std::string("malformed completion reply: ") + e.what());
    }
  }
  throw BackendError(last_kind, last_message + " after " + std::to_string(config_.max_retries + 1) + " attempts");
}

// ---- scripted replay ----

ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept {
  std::lock_guard lock(other.mu_);
  entries_ = std::move(other.entries_);
  calls_ = other.calls_;
}

ScriptedBackend ScriptedBackend::from_jsonl(std::string_view text) {
  ScriptedBackend backend;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      std::string key = j.at("prompt_sha256").get<std::string>();
      if (j.contains("prompt") && key != "*" && sha256_hex(j.at("prompt").get<std::string>()) != key) {
        throw std::invalid_argument("prompt does not match prompt_sha256");
      }
      auto responses = j.at("responses").get<std::vector<nlohmann::json>>();
      if (responses.empty()) throw std::invalid_argument("empty response list");
      backend.add(key, std::move(responses));
    } catch (const std::exception& e) {
      throw std::invalid_argument("script line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return backend;
}

ScriptedBackend ScriptedBackend::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

void ScriptedBackend::add(const std::string& prompt_sha256, std::vector<nlohmann::json> responses) {
  std::lock_guard lock(mu_);
  auto& e = entries_[prompt_sha256];
  e.responses.insert(e.responses.end(), responses.begin(), responses.end());
}

void ScriptedBackend::add_prompt(std::string_view prompt, std::vector<std::string> responses) {
  add(sha256_hex(prompt), std::vector<nlohmann::json>(responses.begin(), responses.end()));
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
  request.validate();
  nlohmann::json picked;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    auto it = entries_.find(sha256_hex(request.prompt));
    if (it == entries_.end()) it = entries_.find("*");
    if (it == entries_.end()) {
      throw BackendError(BackendErrorKind::UnmappedPrompt,
                         "no scripted response for prompt " + sha256_hex(request.prompt).substr(0, 12));
    }
    Entry& e = it->second;
    picked = e.responses[std::min(e.cursor, e.responses.size() - 1)];
    ++e.cursor;
  }
  return response_from_json(picked);
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---- logging and throttling ----

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
  CompletionResponse response = inner_.complete(request);
  std::lock_guard lock(mu_);
  log_.push_back({request, response});
  return response;
}

std::vector<LogEntry> RecordingBackend::entries() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::string RecordingBackend::to_script() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> order;
  std::map<std::string, nlohmann::json> by_hash;
  for (const auto& e : log_) {
    const std::string key = sha256_hex(e.request.prompt);
    auto [it, fresh] = by_hash.try_emplace(key, nlohmann::json::array());
    if (fresh) order.push_back(key);
    if (e.response.finish_reason == FinishReason::Stop) {
      it->second.push_back(e.response.text);
    } else {
      it->second.push_back({{"text", e.response.text}, {"finish_reason", to_string(e.response.finish_reason)}});
    }
  }
  std::string out;
  for (const auto& key : order) {
    out += nlohmann::json{{"prompt_sha256", key}, {"responses", by_hash.at(key)}}.dump();
    out += '\n';
  }
  return out;
}

ConcurrencyLimiter::ConcurrencyLimiter(std::size_t limit) : limit_(limit) {
  if (limit == 0) throw std::invalid_argument("concurrency limit must be >= 1");
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return in_use_ < limit_; });
  ++in_use_;
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_use_;
  }
  cv_.notify_one();
}

CompletionResponse LimitedBackend::complete(const CompletionRequest& request) {
  limiter_.acquire();
  struct Release {
    ConcurrencyLimiter& l;
    ~Release() { l.release(); }
  } release{limiter_};
  return inner_.complete(request);
}

}  // namespace conparse
