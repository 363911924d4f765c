#include "tutorsim/remote_provider.hpp"

#include <cstdlib>

#include <httplib.h>

#include "tutorsim/error.hpp"

namespace tutorsim {

using json = nlohmann::json;

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

RemoteProvider::RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
  validate_config(config_);
  std::tie(origin_, path_prefix_) = split_url(config_.base_url);
}

json RemoteProvider::request_body(const ChatRequest& request) const {
  json messages = json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  for (const auto& m : request.messages) {
    messages.push_back(
        {{"role", m.role == ChatRole::user ? "user" : "assistant"}, {"content", m.text}});
  }
  json body = {{"model", config_.model_name},
               {"messages", messages},
               {"temperature", request.temperature}};
  // A character budget bounds the token budget from above.
  if (request.max_output_chars) body["max_tokens"] = *request.max_output_chars;
  return body;
}

std::string RemoteProvider::extract_content(const std::string& body) {
  try {
    const auto j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::provider_error,
                std::string("unexpected chat-completion response: ") + e.what(),
                {{"transient", false}});
  }
}

std::string RemoteProvider::complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  client.set_write_timeout(30);

  httplib::Headers headers;
  if (!config_.auth_env_var.empty()) {
    if (const char* key = std::getenv(config_.auth_env_var.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto result = client.Post(path_prefix_ + "/chat/completions", headers,
                                  request_body(request).dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::transport_error,
                "transport failure contacting " + origin_ + ": " + httplib::to_string(result.error()),
                {{"transient", true}});
  }
  const int status = result->status;
  if (status >= 400) {
    const bool transient = status == 429 || status >= 500;
    throw Error(ErrorCode::provider_error,
                "provider returned HTTP " + std::to_string(status),
                {{"transient", transient}, {"status", status}});
  }
  return extract_content(result->body);
}

}  // namespace tutorsim
