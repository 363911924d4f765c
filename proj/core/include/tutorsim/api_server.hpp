#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/workbench.hpp"

namespace tutorsim {

struct ApiOptions {
  // Bearer token required on every request when set.
  std::optional<std::string> token;
  // Optional directory served under "/" for a browser client.
  std::optional<std::string> static_dir;
};

// Token from the environment variable, if set and non-empty.
std::optional<std::string> token_from_env(const char* variable = "TUTORSIM_API_TOKEN");

struct RouteDoc {
  std::string method;
  std::string path;  // "{name}" placeholders
  std::string summary;
  std::string request;   // body description, empty when none
  std::string response;  // success body description
  std::vector<std::string> errors;  // API error codes the route can return
  int status = 200;                 // success status
};

// Every route the server registers, in registration order.
const std::vector<RouteDoc>& api_routes();
nlohmann::json openapi_document();
std::string api_markdown();

// {"error": {"code", "message", "details"}}
nlohmann::json error_body(const std::string& code, const std::string& message,
                          const nlohmann::json& details = nullptr);

class ApiServer {
 public:
  ApiServer(std::shared_ptr<Workbench> workbench, ApiOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Blocking.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port; serve with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tutorsim
