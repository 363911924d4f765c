#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutorsim {

enum class ChatRole { user, assistant };

struct ChatTurn {
  ChatRole role = ChatRole::user;
  std::string text;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct ChatRequest {
  std::optional<std::string> system;
  std::vector<ChatTurn> messages;
  double temperature = 0.0;
  std::optional<std::size_t> max_output_chars;
  std::string tag;  // caller label: master, pca, interpret, reflect, respond, tutor

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

// Throws validation_failed unless (system or messages) is non-empty and the
// temperature lies in [0, 2].
void validate_request(const ChatRequest& request);

// Canonical flat rendering used for scripted matching and trace output:
//   [system]\n...\n[user]\n...\n[assistant]\n...
std::string render_request(const ChatRequest& request);

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 500;
  double factor = 2.0;
};

struct ProviderConfig {
  enum class Kind { remote, scripted };

  Kind kind = Kind::scripted;
  std::string base_url;
  std::string model_name;
  std::string auth_env_var;
  std::string script_path;
  RetryPolicy retry;
  std::optional<std::size_t> max_output_chars;
};

void validate_config(const ProviderConfig& config);
ProviderConfig provider_config_from_json(const nlohmann::json& j);
ProviderConfig load_provider_config(const std::string& path);
nlohmann::json to_json_value(const ProviderConfig& config);

// A chat-completion backend. Implementations raise tutorsim::Error; a
// details field {"transient": true} marks failures the gateway may retry.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct TraceEntry {
  std::string tag;
  double latency_ms = 0.0;
  int attempts = 0;
  ChatRequest request;
  std::string completion;
  std::optional<std::string> error;
};

/// Append-only, internally synchronized log of every gateway exchange.
///
/// Entries are kept in memory in full; `write_jsonl` truncates request and
/// completion text to `max_chars`. When a sink path is set each entry is
/// also appended to that file as it is recorded.
class TraceLog {
 public:
  void append(TraceEntry entry);
  std::vector<TraceEntry> entries() const;
  std::vector<TraceEntry> with_tag(const std::string& tag) const;
  std::size_t size() const;
  void clear();

  void set_sink(const std::string& path, std::size_t max_chars = 2000);
  void write_jsonl(std::ostream& out, std::size_t max_chars = 2000) const;

  static nlohmann::json entry_json(const TraceEntry& entry, std::size_t max_chars);

 private:
  mutable std::mutex mutex_;
  std::vector<TraceEntry> entries_;
  std::string sink_path_;
  std::size_t sink_max_chars_ = 2000;
};

/// Entry point for every LLM call: validation, retry with exponential
/// backoff on transient provider failures, empty-completion detection,
/// output truncation and tracing. Safe to share between threads.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::shared_ptr<Provider> provider, RetryPolicy retry = {},
                   std::shared_ptr<TraceLog> trace = std::make_shared<TraceLog>());

  std::string complete(const ChatRequest& request);

  TraceLog& trace() { return *trace_; }
  const TraceLog& trace() const { return *trace_; }
  std::shared_ptr<TraceLog> trace_ptr() const { return trace_; }
  Provider& provider() { return *provider_; }
  const RetryPolicy& retry() const { return retry_; }

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
  void set_default_max_output_chars(std::optional<std::size_t> n) { default_max_chars_ = n; }

 private:
  std::shared_ptr<Provider> provider_;
  RetryPolicy retry_;
  std::shared_ptr<TraceLog> trace_;
  Sleeper sleeper_;
  std::optional<std::size_t> default_max_chars_;
};

std::shared_ptr<Provider> make_provider(const ProviderConfig& config);
std::shared_ptr<Gateway> make_gateway(const ProviderConfig& config,
                                      std::shared_ptr<TraceLog> trace = std::make_shared<TraceLog>());

}  // namespace tutorsim
