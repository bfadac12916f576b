#include "pesc/llm.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <unistd.h>

#include "pesc/core.hpp"

namespace pesc::llm {

namespace fs = std::filesystem;
using nlohmann::json;

void BackendConfig::validate() const {
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (max_in_flight < 1 || max_in_flight > 1024) {
    throw ValidationError("max_in_flight must be in [1, 1024]");
  }
  if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
  if (model.empty()) throw ValidationError("model name is empty");
}

std::uint64_t stable_hash(std::string_view text) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

std::string prompt_text(const ChatRequest& r) { return r.system + "\n" + r.user; }

std::string prompt_head(const ChatRequest& r) {
  auto text = trim(r.user);
  for (auto& c : text) {
    if (c == '\n') c = ' ';
  }
  if (text.size() > 80) text = text.substr(0, 80) + "...";
  return text;
}

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out += field;
  out += ';';
}

std::string format_temperature(double t) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, end);
}

}  // namespace

// ---------------------------------------------------------------------------

MockBackend::MockBackend(std::vector<FixtureRule> rules, std::optional<std::string> default_response)
    : default_response_(std::move(default_response)) {
  json fp = json::array();
  for (auto& rule : rules) {
    if (rule.responses.empty()) throw ValidationError("mock fixture rule has no response");
    CompiledRule compiled{std::move(rule), std::nullopt};
    if (compiled.rule.pattern) compiled.regex.emplace(*compiled.rule.pattern, std::regex::ECMAScript);
    fp.push_back({compiled.rule.contains, compiled.rule.pattern.value_or(""), compiled.rule.responses});
    rules_.push_back(std::move(compiled));
  }
  fp.push_back(default_response_.value_or(""));
  fingerprint_ = sha256_hex(fp.dump()).substr(0, 12);
}

std::shared_ptr<MockBackend> MockBackend::from_json(const json& j) {
  std::vector<FixtureRule> rules;
  std::optional<std::string> fallback;
  if (j.contains("default") && !j.at("default").is_null()) fallback = j.at("default").get<std::string>();
  if (j.contains("rules")) {
    for (const auto& r : j.at("rules")) {
      FixtureRule rule;
      if (r.contains("contains")) {
        const auto& c = r.at("contains");
        if (c.is_string()) {
          rule.contains.push_back(c.get<std::string>());
        } else {
          rule.contains = c.get<std::vector<std::string>>();
        }
      }
      if (r.contains("pattern")) rule.pattern = r.at("pattern").get<std::string>();
      if (r.contains("response")) rule.responses.push_back(r.at("response").get<std::string>());
      if (r.contains("responses")) {
        for (const auto& s : r.at("responses")) rule.responses.push_back(s.get<std::string>());
      }
      rules.push_back(std::move(rule));
    }
  }
  return std::make_shared<MockBackend>(std::move(rules), std::move(fallback));
}

std::shared_ptr<MockBackend> MockBackend::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mock fixture file " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ValidationError("mock fixture file " + path.string() + ": " + e.what());
  }
}

ChatResponse MockBackend::send(const ChatRequest& request) {
  calls_.fetch_add(1);
  const auto prompt = prompt_text(request);
  for (const auto& [rule, regex] : rules_) {
    bool ok = true;
    for (const auto& needle : rule.contains) {
      if (prompt.find(needle) == std::string::npos) {
        ok = false;
        break;
      }
    }
    if (ok && regex) ok = std::regex_search(prompt, *regex);
    if (!ok) continue;
    const auto pick = rule.responses.size() == 1 ? 0 : stable_hash(prompt) % rule.responses.size();
    const auto& text = rule.responses[pick];
    return {text, {static_cast<int>(word_count(prompt)), static_cast<int>(word_count(text))}, id()};
  }
  if (default_response_) {
    return {*default_response_, {static_cast<int>(word_count(prompt)), 1}, id()};
  }
  throw BackendError(0, false, "mock backend has no fixture for prompt: " + prompt_head(request));
}

// ---------------------------------------------------------------------------

std::string cache_key(std::string_view backend_kind, const ChatRequest& request) {
  std::string canonical = "pesc-cache-v1;";
  append_field(canonical, backend_kind);
  append_field(canonical, request.model);
  append_field(canonical, format_temperature(request.temperature));
  append_field(canonical, request.system);
  append_field(canonical, request.user);
  return sha256_hex(canonical);
}

ResponseCache::ResponseCache(fs::path directory) : dir_(std::move(directory)) {
  fs::create_directories(dir_);
}

fs::path ResponseCache::entry_path(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key) const {
  std::ifstream in(entry_path(key));
  if (!in) return std::nullopt;
  try {
    const auto j = json::parse(in);
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    const auto& r = j.at("response");
    ChatResponse out;
    out.text = r.at("text").get<std::string>();
    out.usage.prompt_tokens = r.at("usage").at("prompt_tokens").get<int>();
    out.usage.completion_tokens = r.at("usage").at("completion_tokens").get<int>();
    out.backend_id = r.at("backend_id").get<std::string>();
    return out;
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entry counts as a miss
  }
}

void ResponseCache::put(const std::string& key, const ChatResponse& response) const {
  const auto path = entry_path(key);
  fs::create_directories(path.parent_path());
  json j;
  j["key"] = key;
  j["created_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
  j["response"] = {{"text", response.text},
                   {"usage",
                    {{"prompt_tokens", response.usage.prompt_tokens},
                     {"completion_tokens", response.usage.completion_tokens}}},
                   {"backend_id", response.backend_id}};
  std::ostringstream tid;
  tid << ::getpid() << "." << std::this_thread::get_id();
  auto tmp = path;
  tmp += ".tmp." + tid.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------

Client::Client(std::shared_ptr<Backend> backend, BackendConfig config,
               std::optional<ResponseCache> cache)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      cache_(std::move(cache)),
      in_flight_((config_.validate(), config_.max_in_flight)) {
  if (!backend_) throw ValidationError("client requires a backend");
}

ClientStats Client::stats() const {
  return {requests_.load(), cache_hits_.load(), attempts_.load(), failures_.load()};
}

ChatResponse Client::complete(std::string system, std::string user) {
  return complete(ChatRequest{std::move(system), std::move(user), config_.model, config_.temperature});
}

ChatResponse Client::complete(const ChatRequest& request) {
  if (trim(request.user).empty()) throw ValidationError("chat request has an empty user prompt");
  requests_.fetch_add(1);
  const auto key = cache_key(backend_->kind(), request);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      cache_hits_.fetch_add(1);
      return *hit;
    }
  }
  in_flight_.acquire();
  ChatResponse response;
  try {
    response = call_with_retries(request);
  } catch (...) {
    in_flight_.release();
    failures_.fetch_add(1);
    throw;
  }
  in_flight_.release();
  response.text = trim_right(response.text);
  if (cache_) cache_->put(key, response);
  return response;
}

ChatResponse Client::call_with_retries(const ChatRequest& request) {
  thread_local std::mt19937 jitter_rng{std::random_device{}()};
  int last_status = 0;
  std::string last_message;
  const int max_attempts = 1 + config_.max_retries;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    attempts_.fetch_add(1);
    try {
      return backend_->send(request);
    } catch (const BackendError& e) {
      last_status = e.status();
      last_message = e.what();
      if (e.status() == 401 || e.status() == 403) {
        throw LlmError(e.status(), attempt, "authentication failed: " + last_message);
      }
      if (!e.retryable()) throw LlmError(e.status(), attempt, last_message);
    }
    if (attempt < max_attempts && config_.backoff_base.count() > 0) {
      const auto base = config_.backoff_base * (1LL << std::min(attempt - 1, 10));
      std::uniform_int_distribution<long long> jitter(0, config_.backoff_base.count());
      std::this_thread::sleep_for(base + std::chrono::milliseconds(jitter(jitter_rng)));
    }
  }
  throw LlmError(last_status, max_attempts,
                 "retries exhausted after " + std::to_string(max_attempts) +
                     " attempts (last status " + std::to_string(last_status) + "): " + last_message);
}

}  // namespace pesc::llm
