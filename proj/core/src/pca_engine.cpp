#include "tutorsim/pca_engine.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>

#include <nlohmann/json.hpp>

#include "tutorsim/error.hpp"

namespace tutorsim {

EngineState start_engine(const StateDiagram& diagram, const std::optional<std::string>& start_node) {
  EngineState state;
  state.active_node_id = start_node ? diagram.node(*start_node).id : diagram.root().id;
  return state;
}

std::string assemble_master_prompt(std::span<const Message> tail,
                                   std::span<const std::string> options) {
  if (options.empty())
    throw Error(ErrorCode::validation_failed, "master prompt needs at least one option");
  if (tail.empty() || tail.back().role != Role::student)
    throw Error(ErrorCode::validation_failed, "master prompt passage must end with a student message");

  std::string out =
      "The following passage represents a conversation between a student and a chatbot. "
      "Choose the most appropriate student response from the options. You should choose only "
      "one answer and write it in numbers.\n"
      "\n"
      "Passage:\n";
  for (const auto& m : tail) {
    out += m.role == Role::student ? "Student: " : "Chatbot: ";
    out += m.text;
    out += '\n';
  }
  out += "\nOptions:\n";
  std::size_t n = 1;
  for (const auto& option : options) {
    if (option.empty())
      throw Error(ErrorCode::validation_failed, "empty behavior among master prompt options");
    out += std::to_string(n++) + ". " + option + "\n";
  }
  out += std::to_string(n) + ". " + std::string(kNoneOfTheAbove) + "\n";
  out += "\nAnswer (write in numbers):";
  return out;
}

std::optional<std::size_t> parse_master_answer(std::string_view reply) {
  auto it = std::find_if(reply.begin(), reply.end(), [](unsigned char c) { return std::isdigit(c); });
  if (it == reply.end()) return std::nullopt;
  std::size_t value = 0;
  for (; it != reply.end() && std::isdigit(static_cast<unsigned char>(*it)); ++it) {
    if (value > 1'000'000) return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(*it - '0');
  }
  return value;
}

std::string transition(EngineState& state, const StateDiagram& diagram,
                       const Conversation& conversation, Gateway& gateway, std::size_t window) {
  if (conversation.empty() || conversation.back().role != Role::student)
    throw Error(ErrorCode::validation_failed, "transition requires a trailing student message");

  TransitionLogEntry entry;
  entry.turn = static_cast<std::size_t>(
      std::count_if(conversation.messages.begin(), conversation.messages.end(),
                    [](const Message& m) { return m.role == Role::student; }));
  entry.message_index = conversation.size() - 1;
  entry.from_node = state.active_node_id;
  entry.chosen = state.active_node_id;
  entry.options_presented = diagram.children(state.active_node_id);

  if (entry.options_presented.empty()) {
    entry.note = "leaf node";
    state.transition_log.push_back(std::move(entry));
    return state.active_node_id;
  }

  std::vector<std::string> behaviors;
  behaviors.reserve(entry.options_presented.size());
  for (const auto& id : entry.options_presented) behaviors.push_back(diagram.node(id).behavior);

  ChatRequest request;
  request.tag = "master";
  request.temperature = kMasterTemperature;
  request.messages.push_back(
      {ChatRole::user, assemble_master_prompt(tail(conversation, window), behaviors)});

  const std::string reply = gateway.complete(request);
  entry.raw_answer = reply;

  const auto k = entry.options_presented.size();
  const auto answer = parse_master_answer(reply);
  if (!answer) {
    entry.note = "warning: unparseable master reply; stay";
  } else if (*answer == k + 1) {
    entry.note = "none of the above; stay";
  } else if (*answer < 1 || *answer > k) {
    entry.note = "warning: option " + std::to_string(*answer) + " out of range; stay";
  } else {
    entry.chosen = entry.options_presented[*answer - 1];
    entry.stayed = false;
    state.active_node_id = entry.chosen;
  }
  state.transition_log.push_back(std::move(entry));
  return state.active_node_id;
}

std::string assemble_pca_system_prompt(const DiagramNode& node, const Curriculum& curriculum) {
  if (node.instruction.empty())
    throw Error(ErrorCode::validation_failed, "node '" + node.id + "' has no instruction");

  std::string out = "You are a " + curriculum.discipline + " teacher teaching " + curriculum.level +
                    " students.\n";
  out += "Your subject is " + curriculum.subject +
         ", and the elements that students need to learn are as follows.\n";
  for (const auto& c : curriculum.components) out += "- " + c.text + "\n";
  out += "\n";
  out += "Follow the instructions below to teach a " + curriculum.level +
         " student. You must follow the contents of <instruction> exactly. Do not ask for "
         "additional questions if there is no direct mention.\n";
  out += "You should explain briefly and concisely in 2-3 lines.\n";
  out += "<instruction>\n" + node.instruction + "\n</instruction>";
  return out;
}

std::vector<ChatTurn> pca_view(const Conversation& conversation) {
  std::vector<ChatTurn> turns;
  turns.reserve(conversation.size());
  for (const auto& m : conversation.messages)
    turns.push_back({m.role == Role::pca ? ChatRole::assistant : ChatRole::user, m.text});
  return turns;
}

Message pca_respond(const EngineState& state, const StateDiagram& diagram,
                    const Conversation& conversation, const Curriculum& curriculum,
                    Gateway& gateway, const PcaSettings& settings) {
  if (conversation.empty()) return pca_message(diagram.root().start_message, state.active_node_id);
  if (conversation.back().role != Role::student)
    throw Error(ErrorCode::validation_failed, "pca_respond requires a trailing student message");

  const auto& node = diagram.node(state.active_node_id);
  ChatRequest request;
  request.tag = "pca";
  request.temperature = settings.temperature;
  request.system = assemble_pca_system_prompt(node, curriculum);
  request.messages = pca_view(conversation);
  return pca_message(gateway.complete(request), node.id);
}

void to_json(nlohmann::json& j, const TransitionLogEntry& e) {
  j = {{"turn", e.turn},
       {"message_index", e.message_index},
       {"from", e.from_node},
       {"options_presented", e.options_presented},
       {"chosen", e.chosen},
       {"stayed", e.stayed},
       {"note", e.note}};
  j["raw_answer"] = e.raw_answer ? nlohmann::json(*e.raw_answer) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TransitionLogEntry& e) {
  e.turn = j.at("turn").get<std::size_t>();
  e.message_index = j.at("message_index").get<std::size_t>();
  e.from_node = j.at("from").get<std::string>();
  e.options_presented = j.at("options_presented").get<std::vector<std::string>>();
  e.chosen = j.at("chosen").get<std::string>();
  e.stayed = j.at("stayed").get<bool>();
  e.note = j.value("note", "");
  e.raw_answer.reset();
  if (auto it = j.find("raw_answer"); it != j.end() && !it->is_null())
    e.raw_answer = it->get<std::string>();
}

void to_json(nlohmann::json& j, const EngineState& s) {
  j = {{"active_node_id", s.active_node_id}, {"transition_log", s.transition_log}};
}

void from_json(const nlohmann::json& j, EngineState& s) {
  s.active_node_id = j.at("active_node_id").get<std::string>();
  s.transition_log = j.value("transition_log", std::vector<TransitionLogEntry>{});
}

void write_transition_log_jsonl(const EngineState& state, std::ostream& out) {
  for (const auto& e : state.transition_log) out << nlohmann::json(e).dump() << '\n';
}

}  // namespace tutorsim
