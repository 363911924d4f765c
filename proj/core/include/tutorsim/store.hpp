#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/autochat.hpp"
#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"

namespace tutorsim {

struct TestCaseSet {
  std::string id;
  std::string name;
  std::vector<std::string> cases;
  std::optional<std::string> start_node;

  friend bool operator==(const TestCaseSet&, const TestCaseSet&) = default;
};

// Diagram and curriculum edits bump diagram_version; every other mutation
// bumps revision. save_sequence only changes when the project is saved.
struct Project {
  std::string id;
  std::string name;
  Curriculum curriculum;
  StateDiagram diagram;
  std::int64_t diagram_version = 1;
  std::int64_t revision = 0;
  std::int64_t save_sequence = 0;
  std::vector<StudentProfile> profiles;
  std::vector<ReviewSession> sessions;
  std::vector<TestCaseSet> test_case_sets;
  std::vector<EvalRecord> eval_records;

  const StudentProfile* find_profile(std::string_view id) const;
  StudentProfile& profile(std::string_view id);  // throws not_found
  const StudentProfile& profile(std::string_view id) const;
  ReviewSession* find_session(std::string_view id);
  ReviewSession& session(std::string_view id);
  const TestCaseSet& test_case_set(std::string_view id) const;

  friend bool operator==(const Project&, const Project&) = default;
};

// Empty project on the default curriculum and starter diagram.
Project starter_project(std::string id, std::string name);

// --- Mutations --------------------------------------------------------------

// Rejects invalid diagrams; marks every session stale.
void set_diagram(Project& project, StateDiagram diagram);
// Rejects component changes that existing profiles or records cannot follow.
void set_curriculum(Project& project, Curriculum curriculum);
void upsert_profile(Project& project, StudentProfile profile);
// Refuses while sessions or records reference the profile.
void remove_profile(Project& project, std::string_view profile_id);
void upsert_session(Project& project, ReviewSession session);
void remove_session(Project& project, std::string_view session_id);
void upsert_test_case_set(Project& project, TestCaseSet set);
void remove_test_case_set(Project& project, std::string_view set_id);
void add_eval_record(Project& project, EvalRecord record);

// Cross-reference and schema checks; throws validation_failed.
void validate_project(const Project& project);

// --- Persistence -------------------------------------------------------------

struct SaveHooks {
  // Runs after every temp file is written and before any rename.
  std::function<void()> before_rename;
};

// Writes `dir/project.json` and `dir/conversations/<id>.json` via temp files
// and renames, keeping the previous project.json as project.json.bak.
// Writers on one directory are serialised by an advisory lock; the last
// writer wins. Returns the persisted save sequence.
std::int64_t save_project(const std::string& dir, Project& project, const SaveHooks& hooks = {});

// io_error when missing or unreadable; schema_error when malformed or of an
// unsupported schema version.
Project load_project(const std::string& dir);

// Zip of project.json and the conversation files.
void export_project(const std::string& dir, const std::string& zip_path);
// Extracts into `dir` (must not contain a project yet) and loads it.
Project import_project(const std::string& zip_path, const std::string& dir);

void to_json(nlohmann::json& j, const TestCaseSet& s);
void from_json(const nlohmann::json& j, TestCaseSet& s);

// Full project, sessions inline.
nlohmann::json project_to_json(const Project& project);
Project project_from_json(const nlohmann::json& j);

}  // namespace tutorsim
