#include "tutorsim/workbench.hpp"

#include <algorithm>
#include <filesystem>

#include "tutorsim/error.hpp"
#include "tutorsim/json_codec.hpp"

namespace tutorsim {

namespace fs = std::filesystem;

RoleGateways shared_gateways(std::shared_ptr<Gateway> gateway) {
  return {gateway, gateway, gateway};
}

nlohmann::json sample_profiles(const SampleRequest& request, const ComponentList& components) {
  const auto grid = enumerate_grid();
  const auto picked = farthest_point_indices(grid, request.k, request.seed_index);
  if (request.pipelines.empty())
    throw Error(ErrorCode::validation_failed, "at least one pipeline is required");
  nlohmann::json vectors = nlohmann::json::array();
  nlohmann::json profiles = nlohmann::json::array();
  for (std::size_t i : picked) {
    vectors.push_back(grid[i]);
    for (Pipeline p : request.pipelines) profiles.push_back(materialize(grid[i], components, p));
  }
  return {{"schema", kSchemaVersion},
          {"grid_size", grid.size()},
          {"k", request.k},
          {"seed_index", request.seed_index},
          {"metric", "L1"},
          {"vectors", vectors},
          {"profiles", profiles}};
}

Workbench::Workbench(std::string root, RoleGateways gateways, StudentSettings student,
                     PcaSettings pca)
    : root_(std::move(root)),
      gateways_(std::move(gateways)),
      student_settings_(student),
      pca_settings_(pca) {
  if (!gateways_.pca || !gateways_.student || !gateways_.tutor)
    throw Error(ErrorCode::config_error, "workbench needs a gateway for every role");
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create workspace " + root_ + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "project.json")) continue;
    auto s = std::make_unique<Slot>();
    s->project = load_project(entry.path().string());
    const auto id = s->project.id;
    projects_.emplace(id, std::move(s));
  }
}

std::string Workbench::dir_of(const std::string& pid) const {
  return (fs::path(root_) / pid).string();
}

Workbench::Slot& Workbench::slot(const std::string& pid) const {
  std::lock_guard lock(projects_mutex_);
  auto it = projects_.find(pid);
  if (it == projects_.end())
    throw Error(ErrorCode::not_found, "project '" + pid + "' not found",
                {{"kind", "project"}, {"id", pid}});
  return *it->second;
}

void Workbench::persist(Slot& s) { save_project(dir_of(s.project.id), s.project); }

// --- Projects -------------------------------------------------------------------

std::vector<std::string> Workbench::project_ids() const {
  std::lock_guard lock(projects_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : projects_) ids.push_back(id);
  return ids;
}

std::string Workbench::resolve_project(const std::optional<std::string>& id) const {
  if (id) {
    slot(*id);
    return *id;
  }
  const auto ids = project_ids();
  if (ids.size() == 1) return ids.front();
  throw Error(ErrorCode::validation_failed,
              ids.empty() ? "no project exists yet" : "several projects exist; pass 'project'",
              {{"projects", ids}});
}

Project Workbench::project(const std::string& pid) const {
  auto& s = slot(pid);
  std::lock_guard lock(s.mutex);
  return s.project;
}

Project Workbench::create_project(const std::string& pid, const std::string& name,
                                  const std::optional<Curriculum>& curriculum,
                                  const std::optional<StateDiagram>& diagram) {
  auto s = std::make_unique<Slot>();
  s->project = starter_project(pid, name.empty() ? pid : name);
  if (curriculum) s->project.curriculum = *curriculum;
  if (diagram) s->project.diagram = *diagram;
  validate_project(s->project);

  std::lock_guard lock(projects_mutex_);
  if (projects_.count(pid) || fs::exists(fs::path(dir_of(pid)) / "project.json"))
    throw Error(ErrorCode::validation_failed, "project '" + pid + "' already exists");
  persist(*s);
  Project copy = s->project;
  projects_.emplace(pid, std::move(s));
  return copy;
}

Project Workbench::update_curriculum(const std::string& pid, Curriculum curriculum) {
  return mutate(pid, [&](Project& next) { set_curriculum(next, std::move(curriculum)); });
}

void Workbench::delete_project(const std::string& pid) {
  std::lock_guard lock(projects_mutex_);
  auto it = projects_.find(pid);
  if (it == projects_.end())
    throw Error(ErrorCode::not_found, "project '" + pid + "' not found");
  {
    std::lock_guard slot_lock(it->second->mutex);
    std::error_code ec;
    fs::remove_all(dir_of(pid), ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot delete project: " + ec.message());
  }
  projects_.erase(it);
}

// Applies `f` to a copy and only commits it once it is on disk.
template <class F>
Project Workbench::mutate(const std::string& pid, F&& f) {
  auto& s = slot(pid);
  std::lock_guard lock(s.mutex);
  Project next = s.project;
  f(next);
  std::swap(s.project, next);
  try {
    persist(s);
  } catch (...) {
    std::swap(s.project, next);
    throw;
  }
  return s.project;
}

Project Workbench::put_diagram(const std::string& pid, StateDiagram diagram) {
  return mutate(pid, [&](Project& next) { set_diagram(next, std::move(diagram)); });
}

StudentProfile Workbench::put_profile(const std::string& pid, StudentProfile profile) {
  const auto id = profile.id;
  return mutate(pid, [&](Project& next) { upsert_profile(next, std::move(profile)); }).profile(id);
}

void Workbench::delete_profile(const std::string& pid, const std::string& profile_id) {
  mutate(pid, [&](Project& next) { remove_profile(next, profile_id); });
}

StudentProfile Workbench::generate_overview(const std::string& pid, const std::string& profile_id,
                                            bool force) {
  StudentProfile profile;
  Curriculum curriculum;
  {
    auto& s = slot(pid);
    std::lock_guard lock(s.mutex);
    profile = s.project.profile(profile_id);
    curriculum = s.project.curriculum;
  }
  if (!ensure_overview(profile, curriculum, *gateways_.student, force, student_settings_))
    return profile;
  // Keep edits made to other fields while the call was running.
  return mutate(pid, [&](Project& next) {
           auto current = next.profile(profile_id);
           current.overview = profile.overview;
           upsert_profile(next, current);
         })
      .profile(profile_id);
}

StudentProfile Workbench::ready_profile(const std::string& pid, const std::string& profile_id) {
  auto profile = project(pid).profile(profile_id);
  if (ready_for_simulation(profile)) return profile;
  return generate_overview(pid, profile_id, false);
}

// --- Test cases ---------------------------------------------------------------------

TestCaseSet Workbench::put_test_case_set(const std::string& pid, TestCaseSet set) {
  const auto id = set.id;
  return mutate(pid, [&](Project& next) { upsert_test_case_set(next, std::move(set)); })
      .test_case_set(id);
}

void Workbench::delete_test_case_set(const std::string& pid, const std::string& set_id) {
  mutate(pid, [&](Project& next) { remove_test_case_set(next, set_id); });
}

std::vector<TestCaseResult> Workbench::run_test_case_set(const std::string& pid,
                                                         const std::string& set_id) {
  const auto p = project(pid);
  const auto& set = p.test_case_set(set_id);
  return run_cases(pid, set.cases, set.start_node);
}

std::vector<TestCaseResult> Workbench::run_cases(const std::string& pid,
                                                 const std::vector<std::string>& cases,
                                                 const std::optional<std::string>& start_node) {
  const auto p = project(pid);
  ReviewContext ctx{p.diagram, p.diagram_version, p.curriculum, pca_settings_, student_settings_};
  return run_test_cases(ctx, cases, *gateways_.pca, start_node);
}

// --- Sessions -----------------------------------------------------------------------

ReviewSession Workbench::create_session(const std::string& pid, ReviewMode mode,
                                        const std::optional<std::string>& profile_id,
                                        const std::optional<std::string>& session_id) {
  ReviewSession created;
  mutate(pid, [&](Project& next) {
    if (profile_id) next.profile(*profile_id);
    std::string id;
    if (session_id) {
      if (next.find_session(*session_id))
        throw Error(ErrorCode::validation_failed, "session '" + *session_id + "' already exists");
      id = *session_id;
    } else {
      for (std::size_t n = next.sessions.size() + 1;; ++n) {
        id = "session-" + std::to_string(n);
        if (!next.find_session(id)) break;
      }
    }
    ReviewContext ctx{next.diagram, next.diagram_version, next.curriculum, pca_settings_,
                      student_settings_};
    created = tutorsim::create_session(id, mode, ctx, profile_id);
    upsert_session(next, created);
  });
  return created;
}

ReviewSession Workbench::session(const std::string& pid, const std::string& sid) const {
  auto& s = slot(pid);
  std::lock_guard lock(s.mutex);
  auto copy = s.project;
  return copy.session(sid);
}

void Workbench::delete_session(const std::string& pid, const std::string& sid) {
  auto guard = session_locks_.acquire(pid + "/" + sid);
  mutate(pid, [&](Project& next) { remove_session(next, sid); });
}

namespace {

void check_automated(const Project& p, ReviewSession& session) {
  if (session.mode != ReviewMode::automated || !session.profile_id)
    throw Error(ErrorCode::validation_failed,
                "session '" + session.id + "' is not an automated session");
  if (session.conversation.refresh_stale(p.diagram_version))
    throw Error(ErrorCode::stale_conversation,
                "the diagram changed since session '" + session.id +
                    "' started; regenerate it from the beginning",
                {{"session_diagram_version", session.conversation.diagram_version},
                 {"current_diagram_version", p.diagram_version}});
}

}  // namespace

void Workbench::check_batch(const std::string& pid, const std::string& sid) const {
  auto p = project(pid);
  auto session = p.session(sid);
  check_automated(p, session);
  if (session_locks_.busy(pid + "/" + sid))
    throw Error(ErrorCode::session_busy,
                "session '" + pid + "/" + sid + "' is already processing a request");
}

std::vector<Message> Workbench::generate_batch(const std::string& pid, const std::string& sid,
                                               const ProgressFn& progress) {
  const auto key = pid + "/" + sid;
  auto guard = session_locks_.acquire(key);

  auto p = project(pid);
  auto session = p.session(sid);
  check_automated(p, session);
  const auto profile = ready_profile(pid, *session.profile_id);

  {
    std::lock_guard lock(live_mutex_);
    live_[key].clear();
  }
  auto forward = [&](std::size_t index, const Message& m) {
    {
      std::lock_guard lock(live_mutex_);
      live_[key].push_back(m);
    }
    if (progress) progress(index, m);
  };
  ReviewContext ctx{p.diagram, p.diagram_version, p.curriculum, pca_settings_, student_settings_};
  std::vector<Message> appended;
  try {
    appended = tutorsim::generate_batch(session, profile, ctx,
                                        {*gateways_.pca, *gateways_.student}, forward);
  } catch (...) {
    std::lock_guard lock(live_mutex_);
    live_.erase(key);
    throw;
  }
  mutate(pid, [&](Project& next) {
    session.conversation.refresh_stale(next.diagram_version);
    upsert_session(next, session);
  });
  std::lock_guard lock(live_mutex_);
  live_.erase(key);
  return appended;
}

Message Workbench::direct_message(const std::string& pid, const std::string& sid,
                                  const std::string& text) {
  auto guard = session_locks_.acquire(pid + "/" + sid);
  auto p = project(pid);
  auto session = p.session(sid);
  ReviewContext ctx{p.diagram, p.diagram_version, p.curriculum, pca_settings_, student_settings_};
  auto reply = tutorsim::direct_message(session, text, ctx, *gateways_.pca);
  mutate(pid, [&](Project& next) { upsert_session(next, session); });
  return reply;
}

ReviewSession Workbench::rollback(const std::string& pid, const std::string& sid,
                                  std::size_t pca_index) {
  auto guard = session_locks_.acquire(pid + "/" + sid);
  return mutate(pid, [&](Project& next) {
           auto session = next.session(sid);
           tutorsim::rollback(session, pca_index);
           upsert_session(next, session);
         })
      .session(sid);
}

ReviewSession Workbench::regenerate(const std::string& pid, const std::string& sid) {
  auto guard = session_locks_.acquire(pid + "/" + sid);
  return mutate(pid, [&](Project& next) {
           auto session = next.session(sid);
           ReviewContext ctx{next.diagram, next.diagram_version, next.curriculum, pca_settings_,
                             student_settings_};
           tutorsim::regenerate(session, ctx);
           upsert_session(next, session);
         })
      .session(sid);
}

KnowledgeState Workbench::knowledge(const std::string& pid, const std::string& sid,
                                    std::size_t message_index) const {
  return knowledge_at(session(pid, sid).conversation, message_index);
}

std::vector<Message> Workbench::messages_after(const std::string& pid, const std::string& sid,
                                               std::size_t after) const {
  auto all = session(pid, sid).conversation.messages;
  {
    std::lock_guard lock(live_mutex_);
    if (auto it = live_.find(pid + "/" + sid); it != live_.end())
      all.insert(all.end(), it->second.begin(), it->second.end());
  }
  if (after >= all.size()) return {};
  return {all.begin() + static_cast<std::ptrdiff_t>(after), all.end()};
}

bool Workbench::batch_running(const std::string& pid, const std::string& sid) const {
  std::lock_guard lock(live_mutex_);
  return live_.count(pid + "/" + sid) > 0;
}

// --- Evaluation ---------------------------------------------------------------------

Transcript Workbench::interview(const std::string& pid, const std::string& profile_id,
                                const std::optional<DialogueScript>& script) {
  const auto profile = ready_profile(pid, profile_id);
  const auto p = project(pid);
  return run_interview(profile, script ? *script : default_interview_script(p.curriculum),
                       p.curriculum, *gateways_.student);
}

Transcript Workbench::lesson(const std::string& pid, const std::string& profile_id,
                             const std::optional<DialogueScript>& script) {
  const auto profile = ready_profile(pid, profile_id);
  const auto p = project(pid);
  return run_lesson(profile, script ? *script : default_lesson_script(p.curriculum), p.curriculum,
                    *gateways_.tutor, *gateways_.student);
}

void Workbench::add_records(const std::string& pid, const std::vector<EvalRecord>& records) {
  mutate(pid, [&](Project& next) {
    for (const auto& r : records) add_eval_record(next, r);
  });
}

BiasReport Workbench::report(const std::string& pid) const {
  const auto p = project(pid);
  return build_report(p.profiles, p.eval_records);
}

}  // namespace tutorsim
