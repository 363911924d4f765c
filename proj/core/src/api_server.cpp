#include "tutorsim/api_server.hpp"

#include <cstdlib>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "tutorsim/error.hpp"
#include "tutorsim/json_codec.hpp"

namespace tutorsim {

using json = nlohmann::json;

std::optional<std::string> token_from_env(const char* variable) {
  if (const char* v = std::getenv(variable); v && *v) return std::string(v);
  return std::nullopt;
}

json error_body(const std::string& code, const std::string& message, const json& details) {
  return {{"error", {{"code", code}, {"message", message}, {"details", details}}}};
}

namespace {

struct ApiState {
  std::shared_ptr<Workbench> wb;
  ApiOptions options;
};

using Req = httplib::Request;
using Res = httplib::Response;
using Handler = void (*)(ApiState&, const Req&, Res&);

struct Route {
  RouteDoc doc;
  Handler handler;
};

// --- Request helpers ------------------------------------------------------------

json body_of(const Req& req) {
  if (req.body.empty()) return json::object();
  auto j = parse_json_text(req.body);
  if (!j.is_object()) throw Error(ErrorCode::schema_error, "request body must be a JSON object");
  return j;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::schema_error, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::string req_string(const json& j, const char* key) {
  auto v = opt_string(j, key);
  if (!v) throw Error(ErrorCode::schema_error, std::string("missing field '") + key + "'");
  return *v;
}

std::string param(const Req& req, const char* name) { return req.path_params.at(name); }

std::size_t index_param(const std::string& text) {
  if (text.empty() || text.size() > 9 ||
      text.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorCode::validation_failed, "'" + text + "' is not a message index");
  return static_cast<std::size_t>(std::stoul(text));
}

std::string project_of(ApiState& impl, const Req& req, const json& body = json::object()) {
  std::optional<std::string> id;
  if (req.has_param("project")) id = req.get_param_value("project");
  else id = opt_string(body, "project");
  return impl.wb->resolve_project(id);
}

// The body itself, or its `key` member when present.
json payload(const json& body, const char* key) {
  auto it = body.find(key);
  return it != body.end() ? *it : body;
}

void send(Res& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

json indexed(std::size_t first, const std::vector<Message>& messages) {
  json out = json::array();
  for (std::size_t i = 0; i < messages.size(); ++i)
    out.push_back({{"index", first + i}, {"message", messages[i]}});
  return out;
}

json session_json(const ReviewSession& s) {
  json j = s;
  j["stale"] = s.conversation.stale;
  j["size"] = s.conversation.size();
  return j;
}

json project_summary(const Project& p) {
  return {{"id", p.id},
          {"name", p.name},
          {"diagram_version", p.diagram_version},
          {"revision", p.revision},
          {"profiles", p.profiles.size()},
          {"sessions", p.sessions.size()}};
}

std::string sse(const std::string& event, const json& data, std::optional<std::size_t> id = {}) {
  std::string out = "event: " + event + "\n";
  if (id) out += "id: " + std::to_string(*id) + "\n";
  out += "data: " + data.dump() + "\n\n";
  return out;
}

// --- Handlers ---------------------------------------------------------------------

void health(ApiState&, const Req&, Res& res) { send(res, {{"status", "ok"}}); }

void list_projects(ApiState& impl, const Req&, Res& res) {
  json out = json::array();
  for (const auto& id : impl.wb->project_ids()) out.push_back(project_summary(impl.wb->project(id)));
  send(res, {{"projects", out}});
}

void create_project(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  std::optional<Curriculum> curriculum;
  std::optional<StateDiagram> diagram;
  if (body.contains("curriculum")) curriculum = decode<Curriculum>(body.at("curriculum"));
  if (body.contains("diagram")) diagram = decode<StateDiagram>(body.at("diagram"));
  const auto p = impl.wb->create_project(req_string(body, "id"), body.value("name", std::string()),
                                         curriculum, diagram);
  send(res, project_to_json(p), 201);
}

void get_project(ApiState& impl, const Req& req, Res& res) {
  send(res, project_to_json(impl.wb->project(param(req, "id"))));
}

void delete_project(ApiState& impl, const Req& req, Res& res) {
  impl.wb->delete_project(param(req, "id"));
  send(res, {{"deleted", param(req, "id")}});
}

void put_curriculum(ApiState& impl, const Req& req, Res& res) {
  const auto p = impl.wb->update_curriculum(
      param(req, "id"), decode<Curriculum>(payload(body_of(req), "curriculum")));
  send(res, {{"curriculum", p.curriculum}, {"diagram_version", p.diagram_version}});
}

void get_diagram(ApiState& impl, const Req& req, Res& res) {
  const auto p = impl.wb->project(param(req, "id"));
  send(res, {{"diagram", p.diagram},
             {"diagram_version", p.diagram_version},
             {"validation", validate_diagram(p.diagram)}});
}

void put_diagram(ApiState& impl, const Req& req, Res& res) {
  const auto p =
      impl.wb->put_diagram(param(req, "id"), decode<StateDiagram>(payload(body_of(req), "diagram")));
  json stale = json::array();
  for (const auto& s : p.sessions)
    if (s.conversation.stale) stale.push_back(s.id);
  send(res, {{"diagram", p.diagram},
             {"diagram_version", p.diagram_version},
             {"validation", validate_diagram(p.diagram)},
             {"stale_sessions", stale}});
}

void validate_diagram_route(ApiState&, const Req& req, Res& res) {
  send(res, json(validate_diagram(decode<StateDiagram>(payload(body_of(req), "diagram")))));
}

void list_profiles(ApiState& impl, const Req& req, Res& res) {
  send(res, {{"profiles", impl.wb->project(project_of(impl, req)).profiles}});
}

void post_profile(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  send(res, json(impl.wb->put_profile(pid, decode<StudentProfile>(payload(body, "profile")))), 201);
}

void get_profile(ApiState& impl, const Req& req, Res& res) {
  send(res, json(impl.wb->project(project_of(impl, req)).profile(param(req, "id"))));
}

void put_profile(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  auto profile = decode<StudentProfile>(payload(body, "profile"));
  if (profile.id != param(req, "id"))
    throw Error(ErrorCode::validation_failed, "profile id does not match the path");
  send(res, json(impl.wb->put_profile(pid, std::move(profile))));
}

void delete_profile(ApiState& impl, const Req& req, Res& res) {
  impl.wb->delete_profile(project_of(impl, req), param(req, "id"));
  send(res, {{"deleted", param(req, "id")}});
}

void post_overview(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  const auto p = impl.wb->generate_overview(pid, param(req, "id"), body.value("force", true));
  send(res, {{"profile_id", p.id}, {"overview", p.overview}});
}

void list_testcases(ApiState& impl, const Req& req, Res& res) {
  send(res, {{"test_case_sets", impl.wb->project(project_of(impl, req)).test_case_sets}});
}

void post_testcases(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  send(res, json(impl.wb->put_test_case_set(pid, decode<TestCaseSet>(payload(body, "set")))), 201);
}

void get_testcases(ApiState& impl, const Req& req, Res& res) {
  send(res, json(impl.wb->project(project_of(impl, req)).test_case_set(param(req, "id"))));
}

void put_testcases(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  auto set = decode<TestCaseSet>(payload(body, "set"));
  if (set.id != param(req, "id"))
    throw Error(ErrorCode::validation_failed, "test case set id does not match the path");
  send(res, json(impl.wb->put_test_case_set(pid, std::move(set))));
}

void delete_testcases(ApiState& impl, const Req& req, Res& res) {
  impl.wb->delete_test_case_set(project_of(impl, req), param(req, "id"));
  send(res, {{"deleted", param(req, "id")}});
}

void run_testcase_set(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  send(res, {{"results", impl.wb->run_test_case_set(pid, param(req, "id"))}});
}

void run_adhoc_cases(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  const auto cases = body.at("cases").get<std::vector<std::string>>();
  send(res, {{"results", impl.wb->run_cases(pid, cases, opt_string(body, "start_node"))}});
}

void list_sessions(ApiState& impl, const Req& req, Res& res) {
  json out = json::array();
  for (const auto& s : impl.wb->project(project_of(impl, req)).sessions)
    out.push_back({{"id", s.id},
                   {"mode", to_string(s.mode)},
                   {"profile_id", s.profile_id ? json(*s.profile_id) : json(nullptr)},
                   {"size", s.conversation.size()},
                   {"stale", s.conversation.stale}});
  send(res, {{"sessions", out}});
}

void post_session(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  const auto mode = review_mode_from_string(body.value("mode", std::string("automated")));
  const auto s =
      impl.wb->create_session(pid, mode, opt_string(body, "profile_id"), opt_string(body, "id"));
  send(res, session_json(s), 201);
}

void get_session(ApiState& impl, const Req& req, Res& res) {
  send(res, session_json(impl.wb->session(project_of(impl, req), param(req, "id"))));
}

void delete_session(ApiState& impl, const Req& req, Res& res) {
  impl.wb->delete_session(project_of(impl, req), param(req, "id"));
  send(res, {{"deleted", param(req, "id")}});
}

void post_batch(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  const auto sid = param(req, "id");
  impl.wb->check_batch(pid, sid);
  const bool stream = !(req.has_param("stream") && req.get_param_value("stream") == "0");

  if (!stream) {
    const auto before = impl.wb->session(pid, sid).conversation.size();
    const auto messages = impl.wb->generate_batch(pid, sid);
    send(res, {{"status", "ok"},
               {"messages", indexed(before, messages)},
               {"size", before + messages.size()}});
    return;
  }

  auto* wb = impl.wb.get();
  res.set_header("Cache-Control", "no-cache");
  res.set_chunked_content_provider(
      "text/event-stream", [wb, pid, sid](std::size_t, httplib::DataSink& sink) {
        auto emit = [&](const std::string& chunk) { sink.write(chunk.data(), chunk.size()); };
        try {
          wb->generate_batch(pid, sid, [&](std::size_t index, const Message& m) {
            emit(sse("message", {{"index", index}, {"message", m}}, index));
          });
          emit(sse("done", {{"status", "ok"}, {"size", wb->session(pid, sid).conversation.size()}}));
        } catch (const Error& e) {
          std::size_t size = 0;
          try {
            size = wb->session(pid, sid).conversation.size();
          } catch (const Error&) {
          }
          emit(sse("done", {{"status", "rolled_back"},
                            {"size", size},
                            {"error", error_body(std::string(api_code(e.code())), e.what(),
                                                 e.details())["error"]}}));
        }
        sink.done();
        return true;
      });
}

void get_messages(ApiState& impl, const Req& req, Res& res) {
  const auto pid = project_of(impl, req);
  const auto sid = param(req, "id");
  const std::size_t after = req.has_param("after") ? index_param(req.get_param_value("after")) : 0;
  const auto messages = impl.wb->messages_after(pid, sid, after);
  send(res, {{"messages", indexed(after, messages)},
             {"running", impl.wb->batch_running(pid, sid)}});
}

void post_message(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  const auto sid = param(req, "id");
  const auto reply = impl.wb->direct_message(pid, sid, req_string(body, "text"));
  const auto size = impl.wb->session(pid, sid).conversation.size();
  send(res, {{"reply", reply}, {"index", size - 1}, {"size", size}});
}

void post_rollback(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  if (!body.contains("index") || !body.at("index").is_number_unsigned())
    throw Error(ErrorCode::schema_error, "rollback needs a non-negative integer 'index'");
  send(res, session_json(impl.wb->rollback(pid, param(req, "id"), body.at("index").get<std::size_t>())));
}

void post_regenerate(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  send(res, session_json(impl.wb->regenerate(project_of(impl, req, body), param(req, "id"))));
}

void get_knowledge(ApiState& impl, const Req& req, Res& res) {
  const auto index = index_param(param(req, "index"));
  const auto k = impl.wb->knowledge(project_of(impl, req), param(req, "id"), index);
  send(res, {{"index", index}, {"knowledge", k}, {"acquired", k.acquired_indices()}});
}

void get_transitions(ApiState& impl, const Req& req, Res& res) {
  const auto s = impl.wb->session(project_of(impl, req), param(req, "id"));
  send(res, {{"active_node_id", s.engine.active_node_id},
             {"transition_log", s.engine.transition_log}});
}

void post_sample(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  SampleRequest sample;
  const auto k = body.value("k", 9);
  const auto seed = body.value("seed", 0);
  if (k < 0) throw Error(ErrorCode::k_out_of_range, "k must be positive");
  if (seed < 0) throw Error(ErrorCode::out_of_range, "seed must be non-negative");
  sample.k = static_cast<std::size_t>(k);
  sample.seed_index = static_cast<std::size_t>(seed);
  if (body.contains("pipelines")) {
    sample.pipelines.clear();
    for (const auto& p : body.at("pipelines")) sample.pipelines.push_back(pipeline_from_string(p.get<std::string>()));
  }
  ComponentList components = default_curriculum().components;
  if (req.has_param("project") || body.contains("project") || impl.wb->project_ids().size() == 1)
    components = impl.wb->project(project_of(impl, req, body)).curriculum.components;
  send(res, sample_profiles(sample, components));
}

std::optional<DialogueScript> script_of(const json& body) {
  if (!body.contains("script")) return std::nullopt;
  return decode<DialogueScript>(body.at("script"));
}

void post_interview(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  send(res, json(impl.wb->interview(pid, req_string(body, "profile_id"), script_of(body))));
}

void post_lesson(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  send(res, json(impl.wb->lesson(pid, req_string(body, "profile_id"), script_of(body))));
}

void post_records(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  const auto pid = project_of(impl, req, body);
  std::vector<EvalRecord> records;
  for (const auto& r : body.at("records")) records.push_back(decode<EvalRecord>(r));
  impl.wb->add_records(pid, records);
  send(res, {{"added", records.size()},
             {"total", impl.wb->project(pid).eval_records.size()}}, 201);
}

void post_report(ApiState& impl, const Req& req, Res& res) {
  const auto body = body_of(req);
  BiasReport report;
  if (body.contains("records")) {
    std::vector<StudentProfile> profiles;
    std::vector<EvalRecord> records;
    for (const auto& r : body.at("records")) records.push_back(decode<EvalRecord>(r));
    if (body.contains("profiles")) {
      for (const auto& p : body.at("profiles")) profiles.push_back(decode<StudentProfile>(p));
    } else {
      profiles = impl.wb->project(project_of(impl, req, body)).profiles;
    }
    report = build_report(profiles, records);
  } else {
    report = impl.wb->report(project_of(impl, req, body));
  }
  send(res, {{"report", report_json(report)}, {"markdown", report_markdown(report)}});
}

// --- Registry ---------------------------------------------------------------------

const std::vector<Route>& routes() {
  using V = std::vector<std::string>;
  const V base{"validation_failed", "schema_error"};
  const V nf{"not_found", "validation_failed", "schema_error"};
  const V llm{"not_found", "validation_failed", "schema_error", "provider_error"};
  static const std::vector<Route> table = {
      {{"GET", "/health", "Liveness probe.", "", "{status}", {}}, health},
      {{"GET", "/projects", "List projects.", "", "{projects: [summary]}", {}}, list_projects},
      {{"POST", "/projects", "Create a project on the default curriculum and starter diagram.",
        "{id, name?, curriculum?, diagram?}", "Project", base, 201},
       create_project},
      {{"GET", "/projects/{id}", "Full project with sessions.", "", "Project", nf}, get_project},
      {{"DELETE", "/projects/{id}", "Delete a project and its files.", "", "{deleted}", nf},
       delete_project},
      {{"PUT", "/projects/{id}/curriculum",
        "Replace the curriculum. Bumps diagram_version and stales sessions.",
        "Curriculum or {curriculum}", "{curriculum, diagram_version}", nf},
       put_curriculum},
      {{"GET", "/projects/{id}/diagram", "State diagram, version and validation report.", "",
        "{diagram, diagram_version, validation}", nf},
       get_diagram},
      {{"PUT", "/projects/{id}/diagram",
        "Replace the state diagram. Bumps diagram_version and stales every session.",
        "StateDiagram or {diagram}", "{diagram, diagram_version, validation, stale_sessions}", nf},
       put_diagram},
      {{"POST", "/projects/{id}/diagram/validate", "Validate a diagram without saving it.",
        "StateDiagram or {diagram}", "{errors, warnings}", base},
       validate_diagram_route},
      {{"GET", "/profiles", "List student profiles.", "", "{profiles}", nf}, list_profiles},
      {{"POST", "/profiles", "Create or replace a student profile.",
        "StudentProfile or {profile, project?}", "StudentProfile", nf, 201},
       post_profile},
      {{"GET", "/profiles/{id}", "One student profile.", "", "StudentProfile", nf}, get_profile},
      {{"PUT", "/profiles/{id}", "Replace a student profile (ids must match).",
        "StudentProfile or {profile, project?}", "StudentProfile", nf},
       put_profile},
      {{"DELETE", "/profiles/{id}", "Delete an unreferenced profile.", "", "{deleted}", nf},
       delete_profile},
      {{"POST", "/profiles/{id}/overview",
        "Generate the trait overview (Interpret). The text stays editable via PUT.",
        "{force?: bool = true}", "{profile_id, overview}", llm},
       post_overview},
      {{"GET", "/testcases", "List test case sets.", "", "{test_case_sets}", nf}, list_testcases},
      {{"POST", "/testcases", "Create or replace a test case set.", "TestCaseSet or {set}",
        "TestCaseSet", nf, 201},
       post_testcases},
      {{"POST", "/testcases/run", "Run ad-hoc single-turn cases against the root.",
        "{cases: [string], start_node?}", "{results: [TestCaseResult]}", llm},
       run_adhoc_cases},
      {{"GET", "/testcases/{id}", "One test case set.", "", "TestCaseSet", nf}, get_testcases},
      {{"PUT", "/testcases/{id}", "Replace a test case set.", "TestCaseSet or {set}",
        "TestCaseSet", nf},
       put_testcases},
      {{"DELETE", "/testcases/{id}", "Delete a test case set.", "", "{deleted}", nf},
       delete_testcases},
      {{"POST", "/testcases/{id}/run",
        "Run every case of a set independently; failures stay in their own slot.", "",
        "{results: [TestCaseResult]}", nf},
       run_testcase_set},
      {{"GET", "/sessions", "List review sessions.", "", "{sessions}", nf}, list_sessions},
      {{"POST", "/sessions", "Create a review session.",
        "{mode: automated|direct|testcases, profile_id?, id?}", "ReviewSession",
        {"not_found", "validation_failed", "schema_error"}, 201},
       post_session},
      {{"GET", "/sessions/{id}", "One session with its conversation and engine state.", "",
        "ReviewSession", nf},
       get_session},
      {{"DELETE", "/sessions/{id}", "Delete a session.", "", "{deleted}",
        {"not_found", "session_busy"}},
       delete_session},
      {{"POST", "/sessions/{id}/batch",
        "Generate one 3-turn batch. Streams server-sent events (event: message with "
        "{index, message}, then event: done with {status: ok|rolled_back}); ?stream=0 returns "
        "JSON.",
        "", "text/event-stream, or {status, messages, size}",
        {"not_found", "validation_failed", "stale_conversation", "session_busy", "provider_error"}},
       post_batch},
      {{"GET", "/sessions/{id}/messages",
        "Polling fallback: messages from ?after=N, including a batch in progress.", "",
        "{messages: [{index, message}], running}", nf},
       get_messages},
      {{"POST", "/sessions/{id}/message", "Direct chat: send a student message, get the PCA reply.",
        "{text}", "{reply, index, size}",
        {"not_found", "validation_failed", "schema_error", "stale_conversation", "session_busy",
         "provider_error"}},
       post_message},
      {{"POST", "/sessions/{id}/rollback", "Keep messages up to a PCA message index.", "{index}",
        "ReviewSession", {"not_found", "validation_failed", "schema_error", "session_busy"}},
       post_rollback},
      {{"POST", "/sessions/{id}/regenerate",
        "Restart the conversation from the root under the current diagram.", "", "ReviewSession",
        {"not_found", "session_busy"}},
       post_regenerate},
      {{"GET", "/sessions/{id}/knowledge/{index}",
        "Stored knowledge snapshot of a student message.", "", "{index, knowledge, acquired}",
        nf},
       get_knowledge},
      {{"GET", "/sessions/{id}/transitions", "Active node and transition log.", "",
        "{active_node_id, transition_log}", nf},
       get_transitions},
      {{"POST", "/sample", "Farthest-point sample of the 243-point level grid.",
        "{k?: 9, seed?: 0, pipelines?: [ours|baseline|knowledge_only]}",
        "{grid_size, k, seed_index, metric, vectors, profiles}", base},
       post_sample},
      {{"POST", "/eval/interview", "Run the fixed interview against a profile.",
        "{profile_id, script?}", "Transcript", llm},
       post_interview},
      {{"POST", "/eval/lesson", "Run a tutor-led lesson against a profile.", "{profile_id, script?}",
        "Transcript", llm},
       post_lesson},
      {{"POST", "/eval/records", "Store evaluator prediction records.", "{records: [EvalRecord]}",
        "{added, total}", nf, 201},
       post_records},
      {{"POST", "/eval/report",
        "Bias and believability report from stored records, or from inline records/profiles.",
        "{records?, profiles?}", "{report, markdown}", nf},
       post_report},
  };
  return table;
}

std::string httplib_pattern(const std::string& path) {
  static const std::regex placeholder(R"(\{([a-z_]+)\})");
  return std::regex_replace(path, placeholder, ":$1");
}

int status_of_api_code(const std::string& code) {
  if (code == "stale_conversation" || code == "session_busy") return 409;
  if (code == "not_found") return 404;
  if (code == "schema_error") return 422;
  if (code == "provider_error") return 502;
  return 400;
}

void send_error(Res& res, const Error& e) {
  json details = e.details().is_null() ? json::object() : e.details();
  if (details.is_object()) details["internal_code"] = to_string(e.code());
  res.status = http_status(e.code());
  res.set_content(error_body(std::string(api_code(e.code())), e.what(), details).dump(),
                  "application/json");
}

}  // namespace

struct ApiServer::Impl {
  ApiState state;
  httplib::Server server;
};

const std::vector<RouteDoc>& api_routes() {
  static const std::vector<RouteDoc> docs = [] {
    std::vector<RouteDoc> out;
    for (const auto& r : routes()) out.push_back(r.doc);
    return out;
  }();
  return docs;
}

json openapi_document() {
  json paths = json::object();
  for (const auto& r : api_routes()) {
    json op = {{"summary", r.summary}};
    std::string method = r.method;
    for (auto& c : method) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    json params = json::array();
    static const std::regex placeholder(R"(\{([a-z_]+)\})");
    for (std::sregex_iterator it(r.path.begin(), r.path.end(), placeholder), end; it != end; ++it)
      params.push_back({{"name", (*it)[1].str()}, {"in", "path"}, {"required", true},
                        {"schema", {{"type", "string"}}}});
    if (!params.empty()) op["parameters"] = params;
    if (!r.request.empty())
      op["requestBody"] = {{"description", r.request},
                           {"content", {{"application/json", json::object()}}}};
    json responses = {{std::to_string(r.status), {{"description", r.response}}}};
    for (const auto& code : r.errors) {
      const auto status = std::to_string(status_of_api_code(code));
      std::string desc = responses.contains(status) ? responses[status]["description"].get<std::string>() + ", " : "";
      responses[status] = {{"description", desc + code},
                           {"content",
                            {{"application/json",
                              {{"schema", {{"$ref", "#/components/schemas/ApiError"}}}}}}}};
    }
    op["responses"] = responses;
    paths[r.path][method] = op;
  }
  return {
      {"openapi", "3.0.3"},
      {"info", {{"title", "tutorsim workbench API"}, {"version", "0.1.0"}}},
      {"paths", paths},
      {"components",
       {{"securitySchemes", {{"bearer", {{"type", "http"}, {"scheme", "bearer"}}}}},
        {"schemas",
         {{"ApiError",
           {{"type", "object"},
            {"properties",
             {{"error",
               {{"type", "object"},
                {"properties",
                 {{"code",
                   {{"type", "string"},
                    {"enum", {"stale_conversation", "session_busy", "validation_failed",
                              "provider_error", "not_found", "schema_error"}}}},
                  {"message", {{"type", "string"}}},
                  {"details", json::object()}}}}}}}}}}}}}};
}

std::string api_markdown() {
  std::ostringstream out;
  out << "# HTTP API\n\n"
      << "All bodies are JSON. Endpoints that act on a project take `project` as a query\n"
      << "parameter or body field; it may be omitted when exactly one project exists.\n"
      << "When `TUTORSIM_API_TOKEN` is set every request needs\n"
      << "`Authorization: Bearer <token>`.\n\n"
      << "Errors have the shape `{\"error\": {\"code\", \"message\", \"details\"}}`.\n\n"
      << "| Code | HTTP status |\n|---|---|\n"
      << "| validation_failed | 400 |\n| not_found | 404 |\n| stale_conversation | 409 |\n"
      << "| session_busy | 409 |\n| schema_error | 422 (500 for storage failures) |\n"
      << "| provider_error | 502 |\n\n"
      << "## Endpoints\n\n| Method | Path | Summary | Body | Response | Errors |\n"
      << "|---|---|---|---|---|---|\n";
  auto cell = [](std::string s) {
    std::string o;
    for (char c : s) {
      if (c == '|') o += "\\|";
      else o += c;
    }
    return o;
  };
  for (const auto& r : api_routes()) {
    std::string errors;
    for (const auto& e : r.errors) errors += (errors.empty() ? "" : ", ") + e;
    out << "| " << r.method << " | `" << r.path << "` | " << cell(r.summary) << " | "
        << (r.request.empty() ? "-" : "`" + cell(r.request) + "`") << " | `" << cell(r.response)
        << "` | " << (errors.empty() ? "-" : errors) << " |\n";
  }
  out << "\n## Batch event stream\n\n"
      << "```\nevent: message\nid: 0\ndata: {\"index\":0,\"message\":{...}}\n\n"
      << "event: done\ndata: {\"status\":\"ok\",\"size\":6}\n```\n\n"
      << "A failed batch ends with `status: rolled_back` and an `error` object; the\n"
      << "conversation keeps its length from before the batch.\n";
  return out.str();
}

ApiServer::ApiServer(std::shared_ptr<Workbench> workbench, ApiOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->state.wb = std::move(workbench);
  impl_->state.options = std::move(options);
  auto& server = impl_->server;
  ApiState* impl = &impl_->state;

  server.set_pre_routing_handler([impl](const Req& req, Res& res) {
    if (!impl->options.token || req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + *impl->options.token)
      return httplib::Server::HandlerResponse::Unhandled;
    res.status = 401;
    res.set_content(error_body("validation_failed", "missing or invalid bearer token").dump(),
                    "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });

  for (const auto& route : routes()) {
    const auto pattern = httplib_pattern(route.doc.path);
    const Handler handler = route.handler;
    auto wrapped = [impl, handler](const Req& req, Res& res) {
      try {
        handler(*impl, req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, Error(ErrorCode::schema_error, std::string("malformed request: ") + e.what()));
      } catch (const std::out_of_range& e) {
        send_error(res, Error(ErrorCode::schema_error, std::string("malformed request: ") + e.what()));
      } catch (const std::exception& e) {
        send_error(res, Error(ErrorCode::io_error, e.what()));
      }
    };
    if (route.doc.method == "GET") server.Get(pattern, wrapped);
    else if (route.doc.method == "POST") server.Post(pattern, wrapped);
    else if (route.doc.method == "PUT") server.Put(pattern, wrapped);
    else if (route.doc.method == "DELETE") server.Delete(pattern, wrapped);
  }

  if (impl->options.static_dir) server.set_mount_point("/", *impl->options.static_dir);

  server.set_error_handler([](const Req& req, Res& res) {
    if (!res.body.empty()) return;
    if (res.status == 404)
      res.set_content(error_body("not_found", "no route for " + req.method + " " + req.path).dump(),
                      "application/json");
  });
}

ApiServer::~ApiServer() { stop(); }

bool ApiServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int ApiServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void ApiServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace tutorsim
