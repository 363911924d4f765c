#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/error.hpp"
#include "tutorsim/llm_gateway.hpp"

namespace tutorsim {

// One scripted reply. A rule matches when every given condition holds:
// `tag` equals the request tag, and each `contains` string occurs somewhere
// in render_request(request). A rule with `error` raises that error instead
// of answering (transient errors are retried by the gateway).
struct ScriptRule {
  std::optional<std::string> tag;
  std::vector<std::string> contains;
  std::string response;
  std::optional<ErrorCode> error;
  bool transient = false;
  bool consume_once = false;
};

/// Deterministic offline provider.
///
/// First matching rule in file order wins. Without `consume_once` rules the
/// provider is a pure function of (rules, request); consumed rules make it
/// stateful per instance so one matcher can yield successive replies.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(std::vector<ScriptRule> rules);

  static std::shared_ptr<ScriptedProvider> from_json(const nlohmann::json& script);
  static std::shared_ptr<ScriptedProvider> from_file(const std::string& path);

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "scripted"; }

  std::size_t rule_count() const { return rules_.size(); }
  void reset();

 private:
  std::vector<ScriptRule> rules_;
  std::vector<bool> consumed_;
  std::mutex mutex_;
};

std::vector<ScriptRule> parse_script(const nlohmann::json& script);

}  // namespace tutorsim
