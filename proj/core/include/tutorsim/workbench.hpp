#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/autochat.hpp"
#include "tutorsim/eval_harness.hpp"
#include "tutorsim/llm_gateway.hpp"
#include "tutorsim/profile_sampler.hpp"
#include "tutorsim/store.hpp"

namespace tutorsim {

struct RoleGateways {
  std::shared_ptr<Gateway> pca;      // PCA replies and the master agent
  std::shared_ptr<Gateway> student;  // Interpret, Reflect, Respond
  std::shared_ptr<Gateway> tutor;    // evaluation lessons
};

// Same gateway for every role.
RoleGateways shared_gateways(std::shared_ptr<Gateway> gateway);

struct SampleRequest {
  std::size_t k = 9;
  std::size_t seed_index = 0;
  std::vector<Pipeline> pipelines{Pipeline::ours};
};

// Deterministic sample document: grid size, picked vectors and profiles.
nlohmann::json sample_profiles(const SampleRequest& request, const ComponentList& components);

// Thread-safe service over a workspace directory holding one subdirectory
// per project. Every mutation is persisted before it returns. LLM calls run
// outside the project lock; one operation at a time per session.
class Workbench {
 public:
  Workbench(std::string root, RoleGateways gateways, StudentSettings student = {},
            PcaSettings pca = {});

  const std::string& root() const { return root_; }
  const StudentSettings& student_settings() const { return student_settings_; }

  // --- Projects
  std::vector<std::string> project_ids() const;
  // The only project when `id` is absent; validation_failed if ambiguous.
  std::string resolve_project(const std::optional<std::string>& id) const;
  Project project(const std::string& pid) const;
  Project create_project(const std::string& pid, const std::string& name,
                         const std::optional<Curriculum>& curriculum = std::nullopt,
                         const std::optional<StateDiagram>& diagram = std::nullopt);
  Project update_curriculum(const std::string& pid, Curriculum curriculum);
  void delete_project(const std::string& pid);

  // --- Diagram
  Project put_diagram(const std::string& pid, StateDiagram diagram);

  // --- Profiles
  StudentProfile put_profile(const std::string& pid, StudentProfile profile);
  void delete_profile(const std::string& pid, const std::string& profile_id);
  StudentProfile generate_overview(const std::string& pid, const std::string& profile_id,
                                   bool force = true);

  // --- Test cases
  TestCaseSet put_test_case_set(const std::string& pid, TestCaseSet set);
  void delete_test_case_set(const std::string& pid, const std::string& set_id);
  std::vector<TestCaseResult> run_test_case_set(const std::string& pid, const std::string& set_id);
  std::vector<TestCaseResult> run_cases(const std::string& pid,
                                        const std::vector<std::string>& cases,
                                        const std::optional<std::string>& start_node);

  // --- Sessions
  ReviewSession create_session(const std::string& pid, ReviewMode mode,
                               const std::optional<std::string>& profile_id,
                               const std::optional<std::string>& session_id = std::nullopt);
  ReviewSession session(const std::string& pid, const std::string& sid) const;
  void delete_session(const std::string& pid, const std::string& sid);
  std::vector<Message> generate_batch(const std::string& pid, const std::string& sid,
                                      const ProgressFn& progress = {});
  // Raises the errors generate_batch would raise before its first message
  // (not_found, validation_failed, stale_conversation, session_busy).
  void check_batch(const std::string& pid, const std::string& sid) const;
  Message direct_message(const std::string& pid, const std::string& sid, const std::string& text);
  ReviewSession rollback(const std::string& pid, const std::string& sid, std::size_t pca_index);
  ReviewSession regenerate(const std::string& pid, const std::string& sid);
  KnowledgeState knowledge(const std::string& pid, const std::string& sid,
                           std::size_t message_index) const;
  // Persisted messages from index `after` on, followed by any messages of a
  // batch still in progress.
  std::vector<Message> messages_after(const std::string& pid, const std::string& sid,
                                      std::size_t after) const;
  bool batch_running(const std::string& pid, const std::string& sid) const;

  // --- Evaluation
  Transcript interview(const std::string& pid, const std::string& profile_id,
                       const std::optional<DialogueScript>& script = std::nullopt);
  Transcript lesson(const std::string& pid, const std::string& profile_id,
                    const std::optional<DialogueScript>& script = std::nullopt);
  void add_records(const std::string& pid, const std::vector<EvalRecord>& records);
  BiasReport report(const std::string& pid) const;

 private:
  struct Slot {
    mutable std::mutex mutex;
    Project project;
  };

  Slot& slot(const std::string& pid) const;
  std::string dir_of(const std::string& pid) const;
  void persist(Slot& s);
  template <class F>
  Project mutate(const std::string& pid, F&& f);
  StudentProfile ready_profile(const std::string& pid, const std::string& profile_id);

  std::string root_;
  RoleGateways gateways_;
  StudentSettings student_settings_;
  PcaSettings pca_settings_;

  mutable std::mutex projects_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> projects_;

  SessionLocks session_locks_;
  mutable std::mutex live_mutex_;
  std::map<std::string, std::vector<Message>> live_;
};

}  // namespace tutorsim
