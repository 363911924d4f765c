#include "tutorsim/autochat.hpp"

#include <algorithm>

#include "tutorsim/error.hpp"
#include "tutorsim/json_codec.hpp"

namespace tutorsim {

std::string_view to_string(ReviewMode mode) {
  switch (mode) {
    case ReviewMode::automated: return "automated";
    case ReviewMode::direct: return "direct";
    case ReviewMode::testcases: return "testcases";
  }
  return "automated";
}

ReviewMode review_mode_from_string(std::string_view text) {
  if (text == "automated") return ReviewMode::automated;
  if (text == "direct") return ReviewMode::direct;
  if (text == "testcases") return ReviewMode::testcases;
  throw Error(ErrorCode::validation_failed, "unknown session mode '" + std::string(text) + "'");
}

namespace {

void require_mode(const ReviewSession& session, ReviewMode mode) {
  if (session.mode != mode)
    throw Error(ErrorCode::validation_failed,
                "session '" + session.id + "' is a " + std::string(to_string(session.mode)) +
                    " session, expected " + std::string(to_string(mode)));
}

void require_fresh(ReviewSession& session, const ReviewContext& ctx) {
  if (session.conversation.refresh_stale(ctx.diagram_version))
    throw Error(ErrorCode::stale_conversation,
                "the diagram changed since session '" + session.id +
                    "' started; regenerate it from the beginning",
                {{"session_diagram_version", session.conversation.diagram_version},
                 {"current_diagram_version", ctx.diagram_version}});
}

bool blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

}  // namespace

ReviewSession create_session(std::string id, ReviewMode mode, const ReviewContext& ctx,
                             std::optional<std::string> profile_id) {
  if (mode == ReviewMode::automated && (!profile_id || profile_id->empty()))
    throw Error(ErrorCode::validation_failed, "automated sessions require a profile");
  if (mode != ReviewMode::automated && profile_id)
    throw Error(ErrorCode::validation_failed,
                std::string(to_string(mode)) + " sessions do not take a profile");
  ReviewSession session;
  session.id = std::move(id);
  session.mode = mode;
  session.profile_id = std::move(profile_id);
  session.conversation.id = session.id;
  session.conversation.diagram_version = ctx.diagram_version;
  session.engine = start_engine(ctx.diagram);
  return session;
}

std::vector<Message> generate_batch(ReviewSession& session, const StudentProfile& profile,
                                    const ReviewContext& ctx, Gateways gateways,
                                    const ProgressFn& progress) {
  require_mode(session, ReviewMode::automated);
  if (session.profile_id != profile.id)
    throw Error(ErrorCode::validation_failed,
                "session '" + session.id + "' is bound to a different profile");
  require_fresh(session, ctx);
  if (!session.conversation.empty() && session.conversation.back().role != Role::student)
    throw Error(ErrorCode::validation_failed, "automated conversation ends mid-turn");

  const ReviewSession before = session;
  std::vector<Message> appended;
  auto push = [&](Message m) {
    session.conversation.append(m);
    if (progress) progress(session.conversation.size() - 1, m);
    appended.push_back(std::move(m));
  };
  try {
    for (std::size_t turn = 0; turn < kBatchTurns; ++turn) {
      push(pca_respond(session.engine, ctx.diagram, session.conversation, ctx.curriculum,
                       gateways.pca, ctx.pca));
      auto reply = student_turn(profile, session.conversation, ctx.curriculum, gateways.student,
                                ctx.student);
      push(std::move(reply.message));
      transition(session.engine, ctx.diagram, session.conversation, gateways.pca,
                 ctx.pca.master_window);
    }
  } catch (...) {
    session = before;
    throw;
  }
  return appended;
}

Message direct_message(ReviewSession& session, const std::string& text, const ReviewContext& ctx,
                       Gateway& pca_gateway) {
  require_mode(session, ReviewMode::direct);
  if (blank(text)) throw Error(ErrorCode::validation_failed, "message text is empty");
  require_fresh(session, ctx);

  const ReviewSession before = session;
  try {
    if (session.conversation.empty())
      session.conversation.append(pca_respond(session.engine, ctx.diagram, session.conversation,
                                              ctx.curriculum, pca_gateway, ctx.pca));
    session.conversation.append(student_message(text, KnowledgeState{}));
    transition(session.engine, ctx.diagram, session.conversation, pca_gateway,
               ctx.pca.master_window);
    auto reply = pca_respond(session.engine, ctx.diagram, session.conversation, ctx.curriculum,
                             pca_gateway, ctx.pca);
    session.conversation.append(reply);
    return reply;
  } catch (...) {
    session = before;
    throw;
  }
}

void rollback(ReviewSession& session, std::size_t pca_index) {
  auto& messages = session.conversation.messages;
  if (pca_index >= messages.size() || messages[pca_index].role != Role::pca)
    throw Error(ErrorCode::validation_failed,
                "rollback target " + std::to_string(pca_index) + " is not a pca message",
                {{"size", messages.size()}});
  session.conversation.truncate(pca_index + 1);
  session.engine.active_node_id = *messages[pca_index].active_node_id;
  std::erase_if(session.engine.transition_log,
                [&](const TransitionLogEntry& e) { return e.message_index > pca_index; });
}

void regenerate(ReviewSession& session, const ReviewContext& ctx) {
  session.conversation.messages.clear();
  session.conversation.diagram_version = ctx.diagram_version;
  session.conversation.stale = false;
  session.engine = start_engine(ctx.diagram);
}

std::vector<TestCaseResult> run_test_cases(const ReviewContext& ctx,
                                           const std::vector<std::string>& cases,
                                           Gateway& pca_gateway,
                                           const std::optional<std::string>& start_node) {
  if (cases.empty()) throw Error(ErrorCode::validation_failed, "no test cases given");
  if (start_node) ctx.diagram.node(*start_node);

  std::vector<TestCaseResult> results;
  results.reserve(cases.size());
  for (const auto& utterance : cases) {
    TestCaseResult result;
    result.utterance = utterance;
    try {
      if (blank(utterance)) throw Error(ErrorCode::validation_failed, "test case is empty");
      auto engine = start_engine(ctx.diagram, start_node);
      Conversation conversation;
      conversation.append(pca_message(ctx.diagram.root().start_message, engine.active_node_id));
      conversation.append(student_message(utterance, KnowledgeState{}));
      transition(engine, ctx.diagram, conversation, pca_gateway, ctx.pca.master_window);
      auto reply = pca_respond(engine, ctx.diagram, conversation, ctx.curriculum, pca_gateway,
                               ctx.pca);
      result.reply = reply.text;
      result.node_id = reply.active_node_id;
    } catch (const Error& e) {
      result.error_code = std::string(to_string(e.code()));
      result.error_message = e.what();
    }
    results.push_back(std::move(result));
  }
  return results;
}

KnowledgeState knowledge_at(const Conversation& conversation, std::size_t message_index) {
  if (message_index >= conversation.size() ||
      conversation.messages[message_index].role != Role::student)
    throw Error(ErrorCode::index_not_student_message,
                "message " + std::to_string(message_index) + " is not a student message");
  return *conversation.messages[message_index].knowledge_snapshot;
}

SessionLocks::Guard::~Guard() {
  if (owner_) owner_->release(id_);
}

SessionLocks::Guard SessionLocks::acquire(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  if (!held_.insert(session_id).second)
    throw Error(ErrorCode::session_busy,
                "session '" + session_id + "' is already processing a request");
  return Guard(this, session_id);
}

bool SessionLocks::busy(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return held_.count(session_id) > 0;
}

void SessionLocks::release(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  held_.erase(session_id);
}

void to_json(nlohmann::json& j, const ReviewSession& s) {
  j = {{"schema", kSchemaVersion},
       {"id", s.id},
       {"mode", to_string(s.mode)},
       {"conversation", s.conversation},
       {"engine", s.engine}};
  j["profile_id"] = s.profile_id ? nlohmann::json(*s.profile_id) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ReviewSession& s) {
  check_schema(j);
  s.id = j.at("id").get<std::string>();
  s.mode = review_mode_from_string(j.at("mode").get<std::string>());
  s.conversation = j.at("conversation").get<Conversation>();
  s.engine = j.at("engine").get<EngineState>();
  s.profile_id.reset();
  if (auto it = j.find("profile_id"); it != j.end() && !it->is_null())
    s.profile_id = it->get<std::string>();
  if ((s.mode == ReviewMode::automated) != s.profile_id.has_value())
    throw Error(ErrorCode::schema_error, "session '" + s.id + "' has an invalid profile binding");
}

void to_json(nlohmann::json& j, const TestCaseResult& r) {
  j = {{"utterance", r.utterance}};
  j["reply"] = r.reply ? nlohmann::json(*r.reply) : nlohmann::json(nullptr);
  j["node_id"] = r.node_id ? nlohmann::json(*r.node_id) : nlohmann::json(nullptr);
  if (r.error_code) j["error"] = {{"code", *r.error_code}, {"message", r.error_message}};
  else j["error"] = nullptr;
}

}  // namespace tutorsim
