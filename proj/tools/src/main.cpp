// tutorsim: headless entry points for serving, sampling, simulating and
// evaluating. Every artifact lands under --out; under the scripted provider
// each command is byte-for-byte reproducible.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bundled.hpp"
#include "tutorsim/api_server.hpp"
#include "tutorsim/autochat.hpp"
#include "tutorsim/error.hpp"
#include "tutorsim/eval_harness.hpp"
#include "tutorsim/json_codec.hpp"
#include "tutorsim/llm_gateway.hpp"
#include "tutorsim/profile_sampler.hpp"
#include "tutorsim/scripted_provider.hpp"
#include "tutorsim/store.hpp"
#include "tutorsim/workbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tutorsim;

namespace {

struct GlobalOptions {
  std::string provider;  // provider config JSON; empty selects the scripted provider
  std::string script;    // script for the scripted provider; empty uses the bundled demo
  std::string out = "out";
  std::optional<double> respond_temperature;
  std::optional<bool> anti_repetition;
  bool trace = false;
};

// --- Plumbing ----------------------------------------------------------------

std::shared_ptr<Gateway> build_gateway(const GlobalOptions& g) {
  if (!g.provider.empty()) {
    if (!g.script.empty())
      throw Error(ErrorCode::config_error, "--provider and --script are mutually exclusive");
    return make_gateway(load_provider_config(g.provider));
  }
  std::shared_ptr<Provider> provider;
  if (g.script.empty())
    provider = ScriptedProvider::from_json(parse_json_text(std::string(bundled::kDemoScript)));
  else
    provider = ScriptedProvider::from_file(g.script);
  return std::make_shared<Gateway>(std::move(provider));
}

StudentSettings student_settings(const GlobalOptions& g, StudentSettings base = {}) {
  if (g.respond_temperature) {
    if (*g.respond_temperature < 0.0 || *g.respond_temperature > 2.0)
      throw Error(ErrorCode::config_error, "--respond-temperature must lie in [0, 2]");
    base.respond_temperature = *g.respond_temperature;
  }
  if (g.anti_repetition) base.anti_repetition = *g.anti_repetition;
  return base;
}

fs::path out_dir(const GlobalOptions& g) {
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create output directory " + g.out + ": " + ec.message());
  return fs::path(g.out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_trace(const GlobalOptions& g, const Gateway& gateway) {
  if (!g.trace) return;
  std::ostringstream s;
  gateway.trace().write_jsonl(s);
  write_text(out_dir(g) / "trace.jsonl", s.str());
}

std::vector<StudentProfile> profiles_from_json(const json& j) {
  const json& list = j.is_array() ? j : j.at("profiles");
  return list.get<std::vector<StudentProfile>>();
}

std::vector<StudentProfile> study_profiles() {
  return profiles_from_json(parse_json_text(std::string(bundled::kStudyProfiles)));
}

// Starter diagram and curriculum plus the nine bundled profiles.
Project demo_project() {
  auto p = starter_project("starter", "Starter project");
  for (auto& profile : study_profiles()) upsert_profile(p, std::move(profile));
  return p;
}

Project open_project(const std::string& dir) { return dir.empty() ? demo_project() : load_project(dir); }

std::string transcript_markdown(const Conversation& c, const std::string& title) {
  std::string out = "# " + title + "\n\n";
  for (std::size_t i = 0; i < c.messages.size(); ++i) {
    const auto& m = c.messages[i];
    out += std::to_string(i) + ". ";
    if (m.role == Role::pca) {
      out += "**PCA**";
      if (m.active_node_id) out += " `" + *m.active_node_id + "`";
    } else {
      out += "**Student**";
      if (m.knowledge_snapshot && m.knowledge_snapshot->size() > 0) {
        out += " `";
        for (bool b : m.knowledge_snapshot->bits()) out += b ? '1' : '0';
        out += "`";
      }
    }
    out += ": " + m.text + "\n";
  }
  return out;
}

// Interpret runs once for an ours profile lacking an overview.
StudentProfile prepare_profile(Project& project, const std::string& id, Gateway& gateway,
                               const StudentSettings& settings) {
  auto& profile = project.profile(id);
  if (profile.pipeline == Pipeline::ours) ensure_overview(profile, project.curriculum, gateway, false, settings);
  return profile;
}

// --- Commands ----------------------------------------------------------------

struct ServeOptions {
  std::string workspace = "workspace";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

int cmd_serve(const GlobalOptions& g, const ServeOptions& o) {
  auto wb = std::make_shared<Workbench>(o.workspace, shared_gateways(build_gateway(g)),
                                        student_settings(g));
  if (wb->project_ids().empty()) {
    auto demo = demo_project();
    wb->create_project(demo.id, demo.name);
    for (const auto& p : demo.profiles) wb->put_profile(demo.id, p);
  }
  ApiOptions options;
  options.token = token_from_env();
  if (!o.static_dir.empty()) options.static_dir = o.static_dir;
  ApiServer server(wb, options);
  std::cerr << "tutorsim: serving " << o.workspace << " on http://" << o.host << ":" << o.port
            << "\n";
  if (!server.listen(o.host, o.port))
    throw Error(ErrorCode::config_error, "cannot listen on " + o.host + ":" + std::to_string(o.port));
  return 0;
}

int cmd_init(const std::string& dir, bool with_profiles) {
  if (fs::exists(fs::path(dir) / "project.json"))
    throw Error(ErrorCode::validation_failed, dir + " already holds a project");
  auto project = with_profiles ? demo_project() : starter_project("starter", "Starter project");
  project.id = fs::path(dir).filename().string();
  save_project(dir, project);
  std::cout << "initialised project " << project.id << " in " << dir << "\n";
  return 0;
}

struct SampleOptions {
  std::size_t k = 9;
  std::size_t seed = 0;
  std::vector<std::string> pipelines{"ours"};
};

int cmd_sample(const GlobalOptions& g, const SampleOptions& o) {
  SampleRequest request;
  request.k = o.k;
  request.seed_index = o.seed;
  request.pipelines.clear();
  for (const auto& p : o.pipelines) request.pipelines.push_back(pipeline_from_string(p));
  const auto doc = sample_profiles(request, default_curriculum().components);
  const auto dir = out_dir(g);
  write_json(dir / "profiles.json", doc.at("profiles"));
  write_json(dir / "sample.json", doc);
  std::cout << "wrote " << doc.at("profiles").size() << " profiles to " << (dir / "profiles.json").string()
            << "\n";
  return 0;
}

struct AutochatOptions {
  std::string project;
  std::string profile = "S1";
  int batches = 1;
  std::string session = "autochat";
};

int cmd_autochat(const GlobalOptions& g, const AutochatOptions& o) {
  if (o.batches < 1) throw Error(ErrorCode::config_error, "--batches must be at least 1");
  auto gateway = build_gateway(g);
  const auto settings = student_settings(g);
  auto project = open_project(o.project);
  const auto profile = prepare_profile(project, o.profile, *gateway, settings);

  ReviewContext ctx{project.diagram, project.diagram_version, project.curriculum, {}, settings};
  auto session = create_session(o.session, ReviewMode::automated, ctx, profile.id);
  std::optional<Error> failure;
  try {
    for (int b = 0; b < o.batches; ++b) generate_batch(session, profile, ctx, {*gateway, *gateway});
  } catch (const Error& e) {
    failure = e;  // earlier batches stay in the transcript
  }

  const auto dir = out_dir(g);
  json doc = session;
  doc["profile"] = profile;
  write_json(dir / "transcript.json", doc);
  write_text(dir / "transcript.md",
             transcript_markdown(session.conversation, "Autochat with " + profile.name));
  write_trace(g, *gateway);
  if (failure) throw *failure;
  std::cout << "wrote " << session.conversation.size() << " messages to "
            << (dir / "transcript.json").string() << "\n";
  return 0;
}

struct EvalOptions {
  std::string project;
  std::vector<std::string> profiles;
  std::string script;
  std::string records;
};

int cmd_eval_dialogue(const GlobalOptions& g, const EvalOptions& o, ScriptKind kind) {
  auto gateway = build_gateway(g);
  const auto settings = student_settings(g, evaluation_settings());
  auto project = open_project(o.project);

  DialogueScript script = kind == ScriptKind::interview ? default_interview_script(project.curriculum)
                                                        : default_lesson_script(project.curriculum);
  if (!o.script.empty()) {
    std::ifstream in(o.script, std::ios::binary);
    if (!in) throw Error(ErrorCode::config_error, "cannot open dialogue script " + o.script);
    std::stringstream s;
    s << in.rdbuf();
    script = parse_json_text(s.str()).get<DialogueScript>();
  }
  validate_script(script, project.curriculum.components.size());

  std::vector<std::string> ids = o.profiles;
  if (ids.empty())
    for (const auto& p : project.profiles) ids.push_back(p.id);

  const auto dir = out_dir(g) / std::string(to_string(kind));
  std::optional<Transcript> failed;
  for (const auto& id : ids) {
    const auto profile = prepare_profile(project, id, *gateway, settings);
    const auto t = kind == ScriptKind::interview
                       ? run_interview(profile, script, project.curriculum, *gateway, settings)
                       : run_lesson(profile, script, project.curriculum, *gateway, *gateway, settings);
    write_json(dir / (id + ".json"), t);
    write_text(dir / (id + ".md"),
               transcript_markdown(t.conversation, std::string(to_string(kind)) + " with " + profile.name));
    if (!t.complete && !failed) failed = t;
  }
  write_trace(g, *gateway);
  if (failed) {
    const auto code = failed->error_code ? error_code_from_string(*failed->error_code)
                                         : ErrorCode::provider_error;
    throw Error(code, "transcript for " + failed->profile_id + " is incomplete: " +
                          failed->error_message);
  }
  std::cout << "wrote " << ids.size() << " " << to_string(kind) << " transcripts to " << dir.string()
            << "\n";
  return 0;
}

int cmd_eval_report(const GlobalOptions& g, const EvalOptions& o) {
  if (o.records.empty()) throw Error(ErrorCode::config_error, "--records is required");
  const auto corpus = load_record_corpus(o.records);
  const auto report = build_report(corpus.profiles, corpus.records);
  const auto dir = out_dir(g);
  const auto md = report_markdown(report);
  write_text(dir / "report.md", md);
  write_json(dir / "report.json", report_json(report));
  std::cout << md;
  return 0;
}

int cmd_export(const GlobalOptions& g, const std::string& project_dir) {
  if (project_dir.empty()) throw Error(ErrorCode::config_error, "--project is required");
  const auto project = load_project(project_dir);
  const auto path = out_dir(g) / (project.id + ".zip");
  export_project(project_dir, path.string());
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_import(const std::string& zip, const std::string& project_dir) {
  const auto project = import_project(zip, project_dir);
  std::cout << "imported project " << project.id << " into " << project_dir << "\n";
  return 0;
}

int cmd_docs(const GlobalOptions& g) {
  const auto dir = out_dir(g);
  write_json(dir / "openapi.json", openapi_document());
  write_text(dir / "api.md", api_markdown());
  std::cout << "wrote " << (dir / "openapi.json").string() << " and " << (dir / "api.md").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tutorsim: pedagogical conversational agent workbench"};
  app.set_config("--config", "", "TOML file whose keys mirror the long flag names");
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOptions g;
  app.add_option("--provider", g.provider, "Provider config JSON (default: scripted demo)");
  app.add_option("--script", g.script, "Script file for the scripted provider");
  app.add_option("--out", g.out, "Output directory for every artifact")->capture_default_str();
  app.add_option("--respond-temperature", g.respond_temperature, "Respond sampling temperature");
  app.add_option("--anti-repetition", g.anti_repetition, "Anti-repetition instruction (true/false)");
  app.add_flag("--trace", g.trace, "Also write trace.jsonl (contains timings)");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--workspace", serve.workspace, "Workspace directory")->capture_default_str();
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->capture_default_str()->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--static", serve.static_dir, "Directory served under /");

  std::string init_dir;
  bool init_bare = false;
  auto* init_cmd = app.add_subcommand("init", "Create a starter project directory");
  init_cmd->add_option("--project", init_dir, "Project directory")->required();
  init_cmd->add_flag("--bare", init_bare, "Omit the bundled example profiles");

  SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "Farthest-point sample of student profiles");
  sample_cmd->add_option("--k", sample.k)->capture_default_str();
  sample_cmd->add_option("--seed", sample.seed, "Grid index of the first point")->capture_default_str();
  sample_cmd->add_option("--pipelines", sample.pipelines)->delimiter(',')->capture_default_str();

  AutochatOptions autochat;
  auto* autochat_cmd = app.add_subcommand("autochat", "Simulate automated review batches");
  autochat_cmd->add_option("--project", autochat.project, "Project directory (default: starter)");
  autochat_cmd->add_option("--profile", autochat.profile)->capture_default_str();
  autochat_cmd->add_option("--batches", autochat.batches)->capture_default_str();
  autochat_cmd->add_option("--session", autochat.session, "Session id")->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation dialogues and bias reports");
  eval_cmd->require_subcommand(1);
  eval_cmd->fallthrough();
  auto* interview_cmd = eval_cmd->add_subcommand("interview", "Scripted interview per profile");
  auto* lesson_cmd = eval_cmd->add_subcommand("lesson", "Tutor lesson per profile");
  for (auto* cmd : {interview_cmd, lesson_cmd}) {
    cmd->add_option("--project", eval.project, "Project directory (default: starter)");
    cmd->add_option("--profile", eval.profiles, "Profile id (repeatable; default all)");
    cmd->add_option("--dialogue", eval.script, "Dialogue script JSON");
  }
  auto* report_cmd = eval_cmd->add_subcommand("report", "Bias report from rater records");
  report_cmd->add_option("--records", eval.records, "Record corpus directory")->required();

  std::string export_dir;
  auto* export_cmd = app.add_subcommand("export", "Zip a project directory");
  export_cmd->add_option("--project", export_dir)->required();

  std::string import_zip, import_dir;
  auto* import_cmd = app.add_subcommand("import", "Unpack a project zip");
  import_cmd->add_option("--zip", import_zip)->required();
  import_cmd->add_option("--project", import_dir)->required();

  auto* docs_cmd = app.add_subcommand("docs", "Write openapi.json and api.md");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCode::config_error);
  }

  try {
    if (*serve_cmd) return cmd_serve(g, serve);
    if (*init_cmd) return cmd_init(init_dir, !init_bare);
    if (*sample_cmd) return cmd_sample(g, sample);
    if (*autochat_cmd) return cmd_autochat(g, autochat);
    if (*interview_cmd) return cmd_eval_dialogue(g, eval, ScriptKind::interview);
    if (*lesson_cmd) return cmd_eval_dialogue(g, eval, ScriptKind::lesson);
    if (*report_cmd) return cmd_eval_report(g, eval);
    if (*export_cmd) return cmd_export(g, export_dir);
    if (*import_cmd) return cmd_import(import_zip, import_dir);
    if (*docs_cmd) return cmd_docs(g);
  } catch (const Error& e) {
    std::cerr << "error: " << api_code(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorCode::io_error);
  }
  return 0;
}
