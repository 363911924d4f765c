#include "tutorsim/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include "tutorsim/error.hpp"
#include "tutorsim/remote_provider.hpp"
#include "tutorsim/scripted_provider.hpp"

namespace tutorsim {

using json = nlohmann::json;

void validate_request(const ChatRequest& request) {
  const bool has_system = request.system && !request.system->empty();
  if (!has_system && request.messages.empty())
    throw Error(ErrorCode::validation_failed, "chat request needs a system prompt or messages");
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0))
    throw Error(ErrorCode::validation_failed,
                "temperature " + std::to_string(request.temperature) + " outside [0,2]");
}

std::string render_request(const ChatRequest& request) {
  std::string out;
  if (request.system) out += "[system]\n" + *request.system + "\n";
  for (const auto& m : request.messages) {
    out += m.role == ChatRole::user ? "[user]\n" : "[assistant]\n";
    out += m.text;
    out += "\n";
  }
  return out;
}

void validate_config(const ProviderConfig& config) {
  if (config.kind == ProviderConfig::Kind::remote) {
    if (config.base_url.empty() || config.model_name.empty())
      throw Error(ErrorCode::config_error, "remote provider requires base_url and model_name");
  } else if (config.script_path.empty()) {
    throw Error(ErrorCode::config_error, "scripted provider requires script_path");
  }
  if (config.retry.max_attempts < 1)
    throw Error(ErrorCode::config_error, "retry.max_attempts must be at least 1");
  if (config.retry.base_delay_ms < 0)
    throw Error(ErrorCode::config_error, "retry.base_delay_ms must be non-negative");
}

ProviderConfig provider_config_from_json(const json& j) {
  ProviderConfig c;
  try {
    const auto kind = j.value("kind", "scripted");
    if (kind == "remote") {
      c.kind = ProviderConfig::Kind::remote;
    } else if (kind == "scripted") {
      c.kind = ProviderConfig::Kind::scripted;
    } else {
      throw Error(ErrorCode::config_error, "unknown provider kind '" + kind + "'");
    }
    c.base_url = j.value("base_url", "");
    c.model_name = j.value("model_name", "");
    c.auth_env_var = j.value("auth_env_var", "");
    c.script_path = j.value("script_path", "");
    if (auto it = j.find("retry"); it != j.end()) {
      c.retry.max_attempts = it->value("max_attempts", c.retry.max_attempts);
      c.retry.base_delay_ms = it->value("base_delay_ms", c.retry.base_delay_ms);
      c.retry.factor = it->value("factor", c.retry.factor);
    }
    if (auto it = j.find("max_output_chars"); it != j.end() && !it->is_null())
      c.max_output_chars = it->get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("malformed provider config: ") + e.what());
  }
  validate_config(c);
  return c;
}

ProviderConfig load_provider_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open provider config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, "provider config '" + path + "' is not valid JSON");
  }
  auto config = provider_config_from_json(j);
  // Relative script paths resolve against the config file's directory.
  if (config.kind == ProviderConfig::Kind::scripted) {
    std::filesystem::path script(config.script_path);
    if (script.is_relative())
      config.script_path = (std::filesystem::path(path).parent_path() / script).string();
  }
  return config;
}

json to_json_value(const ProviderConfig& c) {
  json j = {{"kind", c.kind == ProviderConfig::Kind::remote ? "remote" : "scripted"},
            {"retry",
             {{"max_attempts", c.retry.max_attempts},
              {"base_delay_ms", c.retry.base_delay_ms},
              {"factor", c.retry.factor}}}};
  if (c.kind == ProviderConfig::Kind::remote) {
    j["base_url"] = c.base_url;
    j["model_name"] = c.model_name;
    j["auth_env_var"] = c.auth_env_var;
  } else {
    j["script_path"] = c.script_path;
  }
  if (c.max_output_chars) j["max_output_chars"] = *c.max_output_chars;
  return j;
}

// --- TraceLog --------------------------------------------------------------

namespace {

std::string clip(const std::string& text, std::size_t max_chars) {
  if (text.size() <= max_chars) return text;
  return text.substr(0, max_chars) + "…";
}

}  // namespace

json TraceLog::entry_json(const TraceEntry& e, std::size_t max_chars) {
  json j = {{"tag", e.tag},
            {"latency_ms", e.latency_ms},
            {"attempts", e.attempts},
            {"temperature", e.request.temperature},
            {"request", clip(render_request(e.request), max_chars)},
            {"completion", clip(e.completion, max_chars)}};
  j["error"] = e.error ? json(*e.error) : json(nullptr);
  return j;
}

void TraceLog::append(TraceEntry entry) {
  std::lock_guard lock(mutex_);
  if (!sink_path_.empty()) {
    std::ofstream out(sink_path_, std::ios::app);
    out << entry_json(entry, sink_max_chars_).dump() << '\n';
  }
  entries_.push_back(std::move(entry));
}

std::vector<TraceEntry> TraceLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::vector<TraceEntry> TraceLog::with_tag(const std::string& tag) const {
  std::lock_guard lock(mutex_);
  std::vector<TraceEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [&](const TraceEntry& e) { return e.tag == tag; });
  return out;
}

std::size_t TraceLog::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void TraceLog::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

void TraceLog::set_sink(const std::string& path, std::size_t max_chars) {
  std::lock_guard lock(mutex_);
  sink_path_ = path;
  sink_max_chars_ = max_chars;
}

void TraceLog::write_jsonl(std::ostream& out, std::size_t max_chars) const {
  std::lock_guard lock(mutex_);
  for (const auto& e : entries_) out << entry_json(e, max_chars).dump() << '\n';
}

// --- Gateway ---------------------------------------------------------------

namespace {

bool is_transient(const Error& e) {
  const auto& d = e.details();
  return d.is_object() && d.value("transient", false);
}

bool blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

Gateway::Gateway(std::shared_ptr<Provider> provider, RetryPolicy retry,
                 std::shared_ptr<TraceLog> trace)
    : provider_(std::move(provider)), retry_(retry), trace_(std::move(trace)) {
  if (!provider_) throw Error(ErrorCode::config_error, "gateway requires a provider");
  if (!trace_) trace_ = std::make_shared<TraceLog>();
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string Gateway::complete(const ChatRequest& input) {
  validate_request(input);
  ChatRequest request = input;
  if (!request.max_output_chars) request.max_output_chars = default_max_chars_;

  TraceEntry entry;
  entry.tag = request.tag;
  entry.request = request;
  const auto started = std::chrono::steady_clock::now();
  auto finish = [&] {
    entry.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    trace_->append(entry);
  };

  const int attempts = std::max(1, retry_.max_attempts);
  for (int attempt = 1;; ++attempt) {
    entry.attempts = attempt;
    try {
      std::string text = provider_->complete(request);
      if (blank(text)) {
        entry.error = "empty_completion";
        finish();
        throw Error(ErrorCode::empty_completion,
                    "provider returned an empty completion for '" + request.tag + "'");
      }
      if (request.max_output_chars && text.size() > *request.max_output_chars)
        text.resize(*request.max_output_chars);
      entry.completion = text;
      finish();
      return text;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::empty_completion) throw;
      if (is_transient(e) && attempt < attempts) {
        const double delay = retry_.base_delay_ms * std::pow(retry_.factor, attempt - 1);
        sleeper_(std::chrono::milliseconds(static_cast<long long>(delay)));
        continue;
      }
      entry.error = std::string(to_string(e.code())) + ": " + e.what();
      finish();
      json details = e.details().is_object() ? e.details() : json::object();
      details["attempts"] = attempt;
      throw Error(e.code(), e.what(), details);
    }
  }
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config) {
  validate_config(config);
  if (config.kind == ProviderConfig::Kind::remote) return std::make_shared<RemoteProvider>(config);
  return ScriptedProvider::from_file(config.script_path);
}

std::shared_ptr<Gateway> make_gateway(const ProviderConfig& config,
                                      std::shared_ptr<TraceLog> trace) {
  auto gateway = std::make_shared<Gateway>(make_provider(config), config.retry, std::move(trace));
  gateway->set_default_max_output_chars(config.max_output_chars);
  return gateway;
}

}  // namespace tutorsim
