#pragma once

#include <string>

#include "pesc/llm.hpp"

namespace pesc::llm {

// Chat-completions over HTTP(S): POSTs {"model", "temperature", "messages":
// [{"role": "system"}, {"role": "user"}]} and reads
// choices[0].message.content plus the usage block.
class HttpBackend final : public Backend {
 public:
  HttpBackend(std::string endpoint, std::string api_key, int timeout_seconds = 120);

  ChatResponse send(const ChatRequest& request) override;
  std::string kind() const override { return "openai-chat"; }
  std::string id() const override { return "http:" + endpoint_; }

 private:
  std::string endpoint_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  int timeout_seconds_;
};

// Split "https://host:port/v1/chat/completions" into origin and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint);

nlohmann::json encode_chat_request(const ChatRequest& request);
ChatResponse decode_chat_response(const nlohmann::json& body, const std::string& backend_id);

}  // namespace pesc::llm
