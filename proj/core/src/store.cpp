#include "tutorsim/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tutorsim/error.hpp"
#include "tutorsim/json_codec.hpp"
#include "tutorsim/zip_archive.hpp"

namespace tutorsim {

namespace fs = std::filesystem;

namespace {

template <class T>
auto find_by_id(std::vector<T>& items, std::string_view id) {
  return std::find_if(items.begin(), items.end(), [&](const T& x) { return x.id == id; });
}

template <class T>
auto find_by_id(const std::vector<T>& items, std::string_view id) {
  return std::find_if(items.begin(), items.end(), [&](const T& x) { return x.id == id; });
}

[[noreturn]] void missing(std::string_view kind, std::string_view id) {
  throw Error(ErrorCode::not_found, std::string(kind) + " '" + std::string(id) + "' not found",
              {{"kind", kind}, {"id", id}});
}

void invalid(const std::string& message) { throw Error(ErrorCode::validation_failed, message); }

// Ids double as file names.
bool safe_id(std::string_view id) {
  if (id.empty() || id.front() == '.' || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

void mark_stale(Project& project) {
  for (auto& s : project.sessions) s.conversation.refresh_stale(project.diagram_version);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io_error, "failed reading " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << data;
  out.flush();
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    const auto path = (dir / ".lock").string();
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::io_error, "cannot open lock file " + path);
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::io_error, "cannot lock " + path);
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

nlohmann::json header_json(const Project& p) {
  return {{"schema", kSchemaVersion},
          {"id", p.id},
          {"name", p.name},
          {"curriculum", p.curriculum},
          {"diagram", p.diagram},
          {"diagram_version", p.diagram_version},
          {"revision", p.revision},
          {"save_sequence", p.save_sequence},
          {"profiles", p.profiles},
          {"test_case_sets", p.test_case_sets},
          {"eval_records", p.eval_records}};
}

Project header_from_json(const nlohmann::json& j) {
  check_schema(j, true);
  Project p;
  p.id = j.at("id").get<std::string>();
  p.name = j.value("name", p.id);
  p.curriculum = j.at("curriculum").get<Curriculum>();
  p.diagram = j.at("diagram").get<StateDiagram>();
  p.diagram_version = j.at("diagram_version").get<std::int64_t>();
  p.revision = j.value("revision", std::int64_t{0});
  p.save_sequence = j.value("save_sequence", std::int64_t{0});
  p.profiles = j.value("profiles", std::vector<StudentProfile>{});
  p.test_case_sets = j.value("test_case_sets", std::vector<TestCaseSet>{});
  p.eval_records = j.value("eval_records", std::vector<EvalRecord>{});
  return p;
}

template <class F>
auto as_schema_error(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("malformed project: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io_error || e.code() == ErrorCode::schema_error) throw;
    throw Error(ErrorCode::schema_error, std::string("invalid project: ") + e.what(),
                {{"cause", to_string(e.code())}});
  }
}

}  // namespace

// --- Lookup -----------------------------------------------------------------

const StudentProfile* Project::find_profile(std::string_view pid) const {
  auto it = find_by_id(profiles, pid);
  return it == profiles.end() ? nullptr : &*it;
}

StudentProfile& Project::profile(std::string_view pid) {
  auto it = find_by_id(profiles, pid);
  if (it == profiles.end()) missing("profile", pid);
  return *it;
}

const StudentProfile& Project::profile(std::string_view pid) const {
  auto it = find_by_id(profiles, pid);
  if (it == profiles.end()) missing("profile", pid);
  return *it;
}

ReviewSession* Project::find_session(std::string_view sid) {
  auto it = find_by_id(sessions, sid);
  return it == sessions.end() ? nullptr : &*it;
}

ReviewSession& Project::session(std::string_view sid) {
  auto* s = find_session(sid);
  if (!s) missing("session", sid);
  return *s;
}

const TestCaseSet& Project::test_case_set(std::string_view sid) const {
  auto it = find_by_id(test_case_sets, sid);
  if (it == test_case_sets.end()) missing("test case set", sid);
  return *it;
}

Project starter_project(std::string id, std::string name) {
  Project p;
  p.id = std::move(id);
  p.name = std::move(name);
  p.curriculum = default_curriculum();
  p.diagram = starter_diagram();
  return p;
}

// --- Mutations --------------------------------------------------------------

void set_diagram(Project& project, StateDiagram diagram) {
  const auto report = validate_diagram(diagram);
  if (!report.ok())
    throw Error(ErrorCode::validation_failed, "invalid state diagram: " + report.errors.front(),
                {{"errors", report.errors}, {"warnings", report.warnings}});
  project.diagram = std::move(diagram);
  ++project.diagram_version;
  mark_stale(project);
}

void set_curriculum(Project& project, Curriculum curriculum) {
  validate_components(curriculum.components);
  const auto n = curriculum.components.size();
  if (n != project.curriculum.components.size() &&
      (!project.profiles.empty() || !project.eval_records.empty()))
    invalid("cannot change the number of knowledge components while profiles or records exist");
  project.curriculum = std::move(curriculum);
  ++project.diagram_version;
  mark_stale(project);
}

void upsert_profile(Project& project, StudentProfile profile) {
  if (!safe_id(profile.id)) invalid("invalid profile id '" + profile.id + "'");
  validate_profile(profile, project.curriculum.components.size());
  if (auto it = find_by_id(project.profiles, profile.id); it != project.profiles.end())
    *it = std::move(profile);
  else
    project.profiles.push_back(std::move(profile));
  ++project.revision;
}

void remove_profile(Project& project, std::string_view profile_id) {
  auto it = find_by_id(project.profiles, profile_id);
  if (it == project.profiles.end()) missing("profile", profile_id);
  for (const auto& s : project.sessions)
    if (s.profile_id == profile_id)
      invalid("profile '" + std::string(profile_id) + "' is used by session '" + s.id + "'");
  for (const auto& r : project.eval_records)
    if (r.profile_id == profile_id)
      invalid("profile '" + std::string(profile_id) + "' has evaluation records");
  project.profiles.erase(it);
  ++project.revision;
}

void upsert_session(Project& project, ReviewSession session) {
  if (!safe_id(session.id)) invalid("invalid session id '" + session.id + "'");
  if (session.profile_id && !project.find_profile(*session.profile_id))
    missing("profile", *session.profile_id);
  validate_conversation(session.conversation);
  if (auto it = find_by_id(project.sessions, session.id); it != project.sessions.end())
    *it = std::move(session);
  else
    project.sessions.push_back(std::move(session));
  ++project.revision;
}

void remove_session(Project& project, std::string_view session_id) {
  auto it = find_by_id(project.sessions, session_id);
  if (it == project.sessions.end()) missing("session", session_id);
  project.sessions.erase(it);
  ++project.revision;
}

void upsert_test_case_set(Project& project, TestCaseSet set) {
  if (!safe_id(set.id)) invalid("invalid test case set id '" + set.id + "'");
  if (set.cases.empty()) invalid("test case set '" + set.id + "' has no cases");
  if (set.start_node) project.diagram.node(*set.start_node);
  if (auto it = find_by_id(project.test_case_sets, set.id); it != project.test_case_sets.end())
    *it = std::move(set);
  else
    project.test_case_sets.push_back(std::move(set));
  ++project.revision;
}

void remove_test_case_set(Project& project, std::string_view set_id) {
  auto it = find_by_id(project.test_case_sets, set_id);
  if (it == project.test_case_sets.end()) missing("test case set", set_id);
  project.test_case_sets.erase(it);
  ++project.revision;
}

void add_eval_record(Project& project, EvalRecord record) {
  validate_record(record);
  const auto& p = project.profile(record.profile_id);
  if (record.predicted_knowledge.size() != p.initial_knowledge.size())
    throw Error(ErrorCode::length_mismatch, "record predicts " +
                                                std::to_string(record.predicted_knowledge.size()) +
                                                " components, profile has " +
                                                std::to_string(p.initial_knowledge.size()));
  project.eval_records.push_back(std::move(record));
  ++project.revision;
}

void validate_project(const Project& project) {
  if (!safe_id(project.id)) invalid("invalid project id '" + project.id + "'");
  validate_components(project.curriculum.components);
  const auto report = validate_diagram(project.diagram);
  if (!report.ok()) invalid("invalid state diagram: " + report.errors.front());
  if (project.diagram_version < 1) invalid("diagram_version must be positive");

  std::set<std::string> ids;
  for (const auto& p : project.profiles) {
    if (!ids.insert(p.id).second) invalid("duplicate profile id '" + p.id + "'");
    validate_profile(p, project.curriculum.components.size());
  }
  std::set<std::string> session_ids;
  for (const auto& s : project.sessions) {
    if (!safe_id(s.id) || !session_ids.insert(s.id).second)
      invalid("invalid or duplicate session id '" + s.id + "'");
    if (s.profile_id && !ids.count(*s.profile_id))
      invalid("session '" + s.id + "' references unknown profile '" + *s.profile_id + "'");
    if (s.conversation.diagram_version > project.diagram_version)
      invalid("session '" + s.id + "' is newer than the diagram");
    validate_conversation(s.conversation);
  }
  std::set<std::string> set_ids;
  for (const auto& t : project.test_case_sets)
    if (!safe_id(t.id) || !set_ids.insert(t.id).second)
      invalid("invalid or duplicate test case set id '" + t.id + "'");
  for (const auto& r : project.eval_records) {
    validate_record(r);
    if (!ids.count(r.profile_id))
      invalid("evaluation record references unknown profile '" + r.profile_id + "'");
  }
}

// --- JSON ---------------------------------------------------------------------

void to_json(nlohmann::json& j, const TestCaseSet& s) {
  j = {{"id", s.id}, {"name", s.name}, {"cases", s.cases}};
  j["start_node"] = s.start_node ? nlohmann::json(*s.start_node) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TestCaseSet& s) {
  s.id = j.at("id").get<std::string>();
  s.name = j.value("name", s.id);
  s.cases = j.at("cases").get<std::vector<std::string>>();
  s.start_node.reset();
  if (auto it = j.find("start_node"); it != j.end() && !it->is_null())
    s.start_node = it->get<std::string>();
}

nlohmann::json project_to_json(const Project& project) {
  auto j = header_json(project);
  j["sessions"] = project.sessions;
  return j;
}

Project project_from_json(const nlohmann::json& j) {
  return as_schema_error([&] {
    auto p = header_from_json(j);
    p.sessions = j.value("sessions", std::vector<ReviewSession>{});
    validate_project(p);
    return p;
  });
}

// --- Persistence ---------------------------------------------------------------

std::int64_t save_project(const std::string& dir_text, Project& project, const SaveHooks& hooks) {
  validate_project(project);
  const fs::path dir(dir_text);
  const fs::path conv_dir = dir / "conversations";
  std::error_code ec;
  fs::create_directories(conv_dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + conv_dir.string() + ": " + ec.message());

  DirLock lock(dir);

  std::int64_t on_disk = 0;
  if (fs::exists(dir / "project.json")) {
    try {
      on_disk = parse_json_text(read_file(dir / "project.json")).value("save_sequence", std::int64_t{0});
    } catch (const std::exception&) {
      on_disk = 0;
    }
  }
  const std::int64_t sequence = std::max(on_disk, project.save_sequence) + 1;

  auto header = header_json(project);
  header["save_sequence"] = sequence;
  nlohmann::json session_ids = nlohmann::json::array();
  for (const auto& s : project.sessions) session_ids.push_back(s.id);
  header["sessions"] = session_ids;

  std::vector<std::pair<fs::path, fs::path>> renames;
  auto stage = [&](const fs::path& target, const nlohmann::json& body) {
    fs::path tmp = target;
    tmp += ".tmp";
    write_file(tmp, body.dump(2) + "\n");
    renames.emplace_back(tmp, target);
  };

  try {
    for (const auto& s : project.sessions) stage(conv_dir / (s.id + ".json"), nlohmann::json(s));
    stage(dir / "project.json", header);
    if (hooks.before_rename) hooks.before_rename();
  } catch (...) {
    for (const auto& [tmp, _] : renames) fs::remove(tmp, ec);
    throw;
  }

  // project.json goes last so a reader never sees it ahead of its sessions.
  for (const auto& [tmp, target] : renames) {
    if (target.filename() == "project.json" && fs::exists(target)) {
      fs::copy_file(target, dir / "project.json.bak", fs::copy_options::overwrite_existing, ec);
      if (ec) throw Error(ErrorCode::io_error, "cannot back up project.json: " + ec.message());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot rename " + tmp.string() + ": " + ec.message());
  }

  std::set<std::string> keep;
  for (const auto& s : project.sessions) keep.insert(s.id + ".json");
  for (const auto& entry : fs::directory_iterator(conv_dir, ec)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".json" && !keep.count(name)) fs::remove(entry.path(), ec);
  }

  project.save_sequence = sequence;
  return sequence;
}

Project load_project(const std::string& dir_text) {
  const fs::path dir(dir_text);
  const fs::path file = dir / "project.json";
  if (!fs::exists(file)) throw Error(ErrorCode::io_error, "no project at " + dir.string());
  const auto text = read_file(file);
  return as_schema_error([&] {
    const auto j = parse_json_text(text);
    auto p = header_from_json(j);
    for (const auto& sid : j.value("sessions", nlohmann::json::array())) {
      const auto id = sid.get<std::string>();
      if (!safe_id(id)) invalid("invalid session id '" + id + "'");
      const auto file = dir / "conversations" / (id + ".json");
      if (!fs::exists(file))
        throw Error(ErrorCode::schema_error, "project lists session '" + id + "' but " +
                                                 file.string() + " is missing");
      p.sessions.push_back(decode<ReviewSession>(parse_json_text(read_file(file))));
    }
    validate_project(p);
    mark_stale(p);
    return p;
  });
}

void export_project(const std::string& dir_text, const std::string& zip_path) {
  const fs::path dir(dir_text);
  if (!fs::exists(dir / "project.json"))
    throw Error(ErrorCode::io_error, "no project at " + dir.string());
  std::vector<ZipEntry> entries;
  entries.push_back({"project.json", read_file(dir / "project.json")});
  std::vector<fs::path> conversations;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir / "conversations", ec))
    if (entry.path().extension() == ".json") conversations.push_back(entry.path());
  std::sort(conversations.begin(), conversations.end());
  for (const auto& c : conversations)
    entries.push_back({"conversations/" + c.filename().string(), read_file(c)});
  write_file(zip_path, write_zip(entries));
}

Project import_project(const std::string& zip_path, const std::string& dir_text) {
  const fs::path dir(dir_text);
  if (fs::exists(dir / "project.json"))
    invalid("destination " + dir.string() + " already holds a project");
  const auto entries = read_zip(read_file(zip_path));
  bool has_project = false;
  for (const auto& e : entries) {
    const bool conversation = e.name.rfind("conversations/", 0) == 0 &&
                              e.name.find('/', 14) == std::string::npos &&
                              safe_id(e.name.substr(14));
    if (e.name == "project.json") has_project = true;
    else if (!conversation)
      throw Error(ErrorCode::schema_error, "unexpected archive entry '" + e.name + "'");
  }
  if (!has_project) throw Error(ErrorCode::schema_error, "archive has no project.json");

  std::error_code ec;
  fs::create_directories(dir / "conversations", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& e : entries) write_file(dir / e.name, e.data);
  return load_project(dir_text);
}

}  // namespace tutorsim
