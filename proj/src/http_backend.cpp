#include "pesc/http_backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace pesc::llm {

using nlohmann::json;

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint '" + endpoint + "' has no scheme");
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

json encode_chat_request(const ChatRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return {{"model", request.model}, {"temperature", request.temperature}, {"messages", messages}};
}

ChatResponse decode_chat_response(const json& body, const std::string& backend_id) {
  ChatResponse out;
  out.backend_id = backend_id;
  try {
    const auto& message = body.at("choices").at(0).at("message");
    const auto& content = message.at("content");
    out.text = content.is_null() ? std::string() : content.get<std::string>();
    if (body.contains("usage") && body.at("usage").is_object()) {
      const auto& u = body.at("usage");
      out.usage.prompt_tokens = u.value("prompt_tokens", 0);
      out.usage.completion_tokens = u.value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw BackendError(200, false, std::string("malformed chat-completion response: ") + e.what());
  }
  return out;
}

HttpBackend::HttpBackend(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
  std::tie(origin_, path_) = split_endpoint(endpoint_);
}

ChatResponse HttpBackend::send(const ChatRequest& request) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto result = client.Post(path_, headers, encode_chat_request(request).dump(), "application/json");
  if (!result) {
    throw BackendError(0, true, "transport error: " + httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status != 200) {
    const bool retryable = status == 408 || status == 429 || status >= 500;
    throw BackendError(status, retryable,
                       "backend returned HTTP " + std::to_string(status) + ": " +
                           result->body.substr(0, 200));
  }
  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw BackendError(status, true, std::string("unparseable response body: ") + e.what());
  }
  return decode_chat_response(body, id());
}

}  // namespace pesc::llm
