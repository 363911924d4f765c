#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/domain.hpp"
#include "tutorsim/error.hpp"
#include "tutorsim/llm_gateway.hpp"

namespace tutorsim::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture_path(const std::string& name);
std::filesystem::path golden_path(const std::string& name);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);
void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to);

// Compares `actual` with tests/golden/<name>. With UPDATE_GOLDEN=1 in the
// environment the file is rewritten instead. Returns a description of the
// first difference, or nullopt when equal.
std::optional<std::string> golden_mismatch(const std::string& name, const std::string& actual);

// Gateways with a no-op retry sleeper.
std::shared_ptr<Gateway> gateway_for(std::shared_ptr<Provider> provider, RetryPolicy retry = {});
std::shared_ptr<Gateway> scripted_gateway(const nlohmann::json& script);
std::shared_ptr<Provider> demo_provider();
std::shared_ptr<Gateway> demo_gateway();

std::vector<StudentProfile> study_profiles();

// Records every request it sees and forwards to an inner provider.
class RecordingProvider : public Provider {
 public:
  explicit RecordingProvider(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "recording"; }

  std::vector<ChatRequest> requests() const;
  std::size_t count(const std::string& tag) const;

 private:
  std::shared_ptr<Provider> inner_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
};

// Pseudo-random but seed-determined replies for every request tag. Reflect
// replies mix valid indices, out-of-range numbers, garbage and "null";
// master replies mix valid options, "none of the above" and nonsense.
class SeededProvider : public Provider {
 public:
  explicit SeededProvider(std::uint32_t seed) : rng_(seed) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "seeded"; }

 private:
  std::mutex mutex_;
  std::mt19937 rng_;
  std::size_t counter_ = 0;
};

// Blocks every call until release(); used to hold a session lock open.
class BlockingProvider : public Provider {
 public:
  explicit BlockingProvider(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "blocking"; }

  void arm() { armed_ = true; }
  void release();
  // Waits until some call is parked inside complete().
  void wait_for_caller();

 private:
  std::shared_ptr<Provider> inner_;
  std::atomic<bool> armed_{false};
  std::mutex mutex_;
  std::condition_variable cv_;
  bool released_ = false;
  int waiting_ = 0;
};

// Fails with `code` on the n-th call carrying `tag` (1-based), else forwards.
class FailingProvider : public Provider {
 public:
  FailingProvider(std::shared_ptr<Provider> inner, std::string tag, int nth, ErrorCode code)
      : inner_(std::move(inner)), tag_(std::move(tag)), nth_(nth), code_(code) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "failing"; }

 private:
  std::shared_ptr<Provider> inner_;
  std::string tag_;
  int nth_;
  ErrorCode code_;
  std::mutex mutex_;
  int seen_ = 0;
};

}  // namespace tutorsim::testing
