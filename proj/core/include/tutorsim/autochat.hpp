#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/llm_gateway.hpp"
#include "tutorsim/pca_engine.hpp"
#include "tutorsim/sim_student.hpp"

namespace tutorsim {

enum class ReviewMode { automated, direct, testcases };

std::string_view to_string(ReviewMode mode);
ReviewMode review_mode_from_string(std::string_view text);

inline constexpr std::size_t kBatchTurns = 3;
inline constexpr std::size_t kBatchMessages = 2 * kBatchTurns;

// Automated sessions bind exactly one profile; the other modes bind none.
struct ReviewSession {
  std::string id;
  ReviewMode mode = ReviewMode::automated;
  Conversation conversation;
  std::optional<std::string> profile_id;
  EngineState engine;

  friend bool operator==(const ReviewSession&, const ReviewSession&) = default;
};

// Everything a review operation reads from the project. The diagram
// version is compared against the session's conversation for staleness.
struct ReviewContext {
  const StateDiagram& diagram;
  std::int64_t diagram_version;
  const Curriculum& curriculum;
  PcaSettings pca{};
  StudentSettings student{};
};

// The PCA gateway also serves the master agent.
struct Gateways {
  Gateway& pca;
  Gateway& student;
};

ReviewSession create_session(std::string id, ReviewMode mode, const ReviewContext& ctx,
                             std::optional<std::string> profile_id = std::nullopt);

using ProgressFn = std::function<void(std::size_t index, const Message& message)>;

// Appends one 3-turn batch (6 messages). On any error the session is
// restored to its state before the call and the error is rethrown.
std::vector<Message> generate_batch(ReviewSession& session, const StudentProfile& profile,
                                    const ReviewContext& ctx, Gateways gateways,
                                    const ProgressFn& progress = {});

// Teacher-written student message, then transition and PCA reply. An empty
// direct session is first seeded with the root start message. Human
// messages carry a zero-length knowledge snapshot.
Message direct_message(ReviewSession& session, const std::string& text, const ReviewContext& ctx,
                       Gateway& pca_gateway);

// Keeps messages [0, pca_index] and rebuilds the engine from them.
void rollback(ReviewSession& session, std::size_t pca_index);

// Drops the conversation and restarts at the root under the current
// diagram version.
void regenerate(ReviewSession& session, const ReviewContext& ctx);

struct TestCaseResult {
  std::string utterance;
  std::optional<std::string> reply;
  std::optional<std::string> node_id;
  std::optional<std::string> error_code;
  std::string error_message;

  bool ok() const noexcept { return reply.has_value(); }
  friend bool operator==(const TestCaseResult&, const TestCaseResult&) = default;
};

// Each case runs against a fresh engine: start message, the utterance as
// turn 1, transition, PCA reply. Errors stay in their own slot.
std::vector<TestCaseResult> run_test_cases(const ReviewContext& ctx,
                                           const std::vector<std::string>& cases,
                                           Gateway& pca_gateway,
                                           const std::optional<std::string>& start_node = std::nullopt);

// Stored snapshot of a student message; never recomputed.
KnowledgeState knowledge_at(const Conversation& conversation, std::size_t message_index);

// One operation at a time per session id.
class SessionLocks {
 public:
  class Guard {
   public:
    Guard(SessionLocks* owner, std::string id) : owner_(owner), id_(std::move(id)) {}
    Guard(Guard&& other) noexcept : owner_(other.owner_), id_(std::move(other.id_)) {
      other.owner_ = nullptr;
    }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;
    Guard& operator=(Guard&&) = delete;
    ~Guard();

   private:
    SessionLocks* owner_;
    std::string id_;
  };

  // Throws session_busy when the id is already held.
  Guard acquire(const std::string& session_id);
  bool busy(const std::string& session_id) const;

 private:
  void release(const std::string& session_id);

  mutable std::mutex mutex_;
  std::set<std::string> held_;
};

void to_json(nlohmann::json& j, const ReviewSession& s);
void from_json(const nlohmann::json& j, ReviewSession& s);
void to_json(nlohmann::json& j, const TestCaseResult& r);

}  // namespace tutorsim
