#include "tutorsim/scripted_provider.hpp"

#include <fstream>
#include <sstream>

#include "tutorsim/json_codec.hpp"

namespace tutorsim {

namespace {

ErrorCode error_from_string(const std::string& name) {
  static const std::vector<ErrorCode> kAllowed = {
      ErrorCode::provider_error, ErrorCode::transport_error, ErrorCode::empty_completion,
      ErrorCode::script_miss};
  for (auto code : kAllowed)
    if (to_string(code) == name) return code;
  throw Error(ErrorCode::schema_error, "script rule has unsupported error '" + name + "'");
}

}  // namespace

std::vector<ScriptRule> parse_script(const json& script) {
  const json* rules = &script;
  if (script.is_object()) {
    check_schema(script);
    if (!script.contains("rules")) throw Error(ErrorCode::schema_error, "script has no 'rules'");
    rules = &script.at("rules");
  }
  if (!rules->is_array()) throw Error(ErrorCode::schema_error, "script rules must be an array");

  std::vector<ScriptRule> out;
  try {
    for (const auto& r : *rules) {
      ScriptRule rule;
      if (auto m = r.find("match"); m != r.end()) {
        if (auto t = m->find("tag"); t != m->end()) rule.tag = t->get<std::string>();
        if (auto c = m->find("contains"); c != m->end()) {
          if (c->is_array()) {
            rule.contains = c->get<std::vector<std::string>>();
          } else {
            rule.contains.push_back(c->get<std::string>());
          }
        }
      }
      rule.response = r.value("response", "");
      if (auto e = r.find("error"); e != r.end() && !e->is_null())
        rule.error = error_from_string(e->get<std::string>());
      rule.transient = r.value("transient", false);
      rule.consume_once = r.value("consume_once", false);
      out.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("malformed script rule: ") + e.what());
  }
  return out;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules)
    : rules_(std::move(rules)), consumed_(rules_.size(), false) {}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_json(const json& script) {
  return std::make_shared<ScriptedProvider>(parse_script(script));
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open script file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(parse_json_text(buffer.str()));
}

void ScriptedProvider::reset() {
  std::lock_guard lock(mutex_);
  consumed_.assign(rules_.size(), false);
}

std::string ScriptedProvider::complete(const ChatRequest& request) {
  const std::string rendered = render_request(request);
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (consumed_[i]) continue;
    const auto& rule = rules_[i];
    if (rule.tag && *rule.tag != request.tag) continue;
    bool all = true;
    for (const auto& needle : rule.contains) {
      if (rendered.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (!all) continue;
    if (rule.consume_once) consumed_[i] = true;
    if (rule.error) {
      throw Error(*rule.error, "scripted " + std::string(to_string(*rule.error)) + " for '" +
                                   request.tag + "'",
                  {{"transient", rule.transient}, {"rule", i}});
    }
    return rule.response;
  }
  throw Error(ErrorCode::script_miss, "no script rule matches request tagged '" + request.tag + "'",
              {{"tag", request.tag}});
}

}  // namespace tutorsim
