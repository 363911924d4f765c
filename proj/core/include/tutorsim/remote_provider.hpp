#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tutorsim/llm_gateway.hpp"

namespace tutorsim {

// OpenAI-compatible chat-completion client:
//   POST {base_url}/chat/completions
//   {"model", "messages": [{"role","content"}...], "temperature", "max_tokens"?}
// The API key, when configured, is read from the named environment variable
// on every call and sent as a bearer token.
class RemoteProvider : public Provider {
 public:
  explicit RemoteProvider(ProviderConfig config);

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "remote:" + config_.model_name; }

  nlohmann::json request_body(const ChatRequest& request) const;
  static std::string extract_content(const std::string& body);

 private:
  ProviderConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
};

}  // namespace tutorsim
