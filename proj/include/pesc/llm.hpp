#pragma once

// Chat-completion client: pluggable backends, a content-addressed disk
// cache, retries with exponential backoff, and a bound on in-flight calls.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesc/error.hpp"

namespace pesc::llm {

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  int max_retries = 3;
  int max_in_flight = 4;
  std::string api_key;  // never persisted
  std::chrono::milliseconds backoff_base{500};

  void validate() const;
};

struct ChatRequest {
  std::string system;
  std::string user;
  std::string model;
  double temperature = 0.0;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  std::string backend_id;
  friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

// Raised by transports. `status` is the HTTP status, or 0 for transport errors.
class BackendError : public Error {
 public:
  BackendError(int status, bool retryable, const std::string& message)
      : Error(message), status_(status), retryable_(retryable) {}
  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

// Raised by Client when a request cannot be completed.
class LlmError : public Error {
 public:
  LlmError(int last_status, int attempts, const std::string& message)
      : Error(message), last_status_(last_status), attempts_(attempts) {}
  int last_status() const noexcept { return last_status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int last_status_;
  int attempts_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
  // Transport family; part of the cache key ("mock", "openai-chat").
  virtual std::string kind() const = 0;
  // Human-readable identity recorded in manifests.
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Mock backend

// A rule matches when every `contains` substring occurs in the prompt
// (system + "\n" + user) and `pattern`, when set, matches somewhere in it.
// With several responses, one is picked by a stable hash of the prompt.
struct FixtureRule {
  std::vector<std::string> contains;
  std::optional<std::string> pattern;
  std::vector<std::string> responses;
};

class MockBackend final : public Backend {
 public:
  MockBackend(std::vector<FixtureRule> rules, std::optional<std::string> default_response);

  // {"default": "3", "rules": [{"contains": [...], "pattern": "...",
  //   "response": "..." | "responses": [...]}]}
  static std::shared_ptr<MockBackend> from_json(const nlohmann::json& j);
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

  ChatResponse send(const ChatRequest& request) override;
  std::string kind() const override { return "mock"; }
  std::string id() const override { return "mock:" + fingerprint_; }

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  struct CompiledRule {
    FixtureRule rule;
    std::optional<std::regex> regex;
  };
  std::vector<CompiledRule> rules_;
  std::optional<std::string> default_response_;
  std::string fingerprint_;
  std::atomic<std::size_t> calls_{0};
};

// 64-bit FNV-1a; used for fixture choice so picks are identical on every platform.
std::uint64_t stable_hash(std::string_view text) noexcept;

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Cache

// Pure function of request content and backend kind; retry/concurrency
// settings never enter the key.
std::string cache_key(std::string_view backend_kind, const ChatRequest& request);

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<ChatResponse> get(const std::string& key) const;
  // Write-temp-then-rename, so concurrent writers never leave a torn entry.
  void put(const std::string& key, const ChatResponse& response) const;

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Client

struct ClientStats {
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_attempts = 0;
  std::size_t failures = 0;
};

class Client {
 public:
  Client(std::shared_ptr<Backend> backend, BackendConfig config,
         std::optional<ResponseCache> cache = std::nullopt);

  ChatResponse complete(const ChatRequest& request);
  // Fills model and temperature from the config.
  ChatResponse complete(std::string system, std::string user);

  const BackendConfig& config() const noexcept { return config_; }
  const Backend& backend() const noexcept { return *backend_; }
  ClientStats stats() const;

 private:
  ChatResponse call_with_retries(const ChatRequest& request);

  std::shared_ptr<Backend> backend_;
  BackendConfig config_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> attempts_{0};
  std::atomic<std::size_t> failures_{0};
};

}  // namespace pesc::llm
