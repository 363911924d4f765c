#include "tutorsim/sim_student.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tutorsim/error.hpp"

namespace tutorsim {

namespace {

std::string trim(std::string_view text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(begin, end - begin + 1));
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool blank(std::string_view text) { return trim(text).empty(); }

std::string trait_tag(Trait trait) {
  std::string label(trait_label(trait));
  std::replace(label.begin(), label.end(), ' ', '-');
  return "student's-" + label;
}

}  // namespace

StudentSettings evaluation_settings() {
  StudentSettings s;
  s.respond_temperature = 0.0;
  s.anti_repetition = false;
  return s;
}

// --- Interpret -------------------------------------------------------------

std::string render_trait_responses(const TraitRatings& ratings) {
  std::string out;
  for (Trait t : kTraits) {
    if (!out.empty()) out += "\n";
    const auto tag = trait_tag(t);
    out += "<" + tag + ">\n";
    const auto& statements = inventory_items(t);
    for (std::size_t i = 0; i < kItemsPerTrait; ++i) {
      const int r = ratings.item(t, i);
      out += "- " + std::string(statements[i]) + ": " + std::to_string(r) + " (" +
             std::string(likert_label(r)) + ")\n";
    }
    out += "</" + tag + ">\n";
  }
  return out;
}

std::string assemble_interpret_prompt(const TraitRatings& ratings, const Curriculum& curriculum) {
  std::string out =
      "You are a playwright who describes the psychology and behavior of characters well.\n";
  out += "You need to describe a " + curriculum.level +
         " student, and the direct responses to the student's goal commitment, motivation, "
         "self-efficacy, and stress are below.\n\n";
  out += render_trait_responses(ratings);
  out +=
      "\nBased on the information above, describe the student profile in detail about the "
      "student's goal commitment, motivation, self-efficacy, and stress.\n"
      "Interpret each category as independently as possible, and it should be interpreted as "
      "high, medium, and low, not positive/negative.\n"
      "For 'neutral,' you must write it in a neutral way.";
  return out;
}

TraitOverview interpret(const TraitRatings& ratings, const Curriculum& curriculum, Gateway& gateway,
                        const StudentSettings& settings) {
  ChatRequest request;
  request.tag = "interpret";
  request.temperature = settings.interpret_temperature;
  request.messages.push_back({ChatRole::user, assemble_interpret_prompt(ratings, curriculum)});
  TraitOverview overview;
  overview.text = gateway.complete(request);
  overview.generated_from = ratings;
  overview.edited = false;
  return overview;
}

bool ensure_overview(StudentProfile& profile, const Curriculum& curriculum, Gateway& gateway,
                     bool force, const StudentSettings& settings) {
  const auto& o = profile.overview;
  const bool missing = blank(o.text);
  const bool outdated = !o.edited && o.generated_from && *o.generated_from != profile.ratings;
  if (!force && !missing && !outdated) return false;
  profile.overview = interpret(profile.ratings, curriculum, gateway, settings);
  return true;
}

std::vector<Trait> missing_trait_sections(std::string_view overview) {
  const auto text = lower(overview);
  std::vector<Trait> missing;
  for (Trait t : kTraits) {
    std::vector<std::string> needles;
    switch (t) {
      case Trait::goal_commitment: needles = {"goal"}; break;
      case Trait::motivation: needles = {"motivat"}; break;
      case Trait::self_efficacy: needles = {"self-efficacy", "self efficacy"}; break;
      case Trait::stress: needles = {"stress", "pressure"}; break;
    }
    const bool found = std::any_of(needles.begin(), needles.end(), [&](const std::string& n) {
      return text.find(n) != std::string::npos;
    });
    if (!found) missing.push_back(t);
  }
  return missing;
}

// --- Reflect ---------------------------------------------------------------

std::string assemble_reflect_prompt(const KnowledgeState& state, std::span<const Message> tail,
                                    const Curriculum& curriculum) {
  state.expect_size(curriculum.components.size());
  std::string out = "You are a " + curriculum.level +
                    " teacher who evaluates students' knowledge. You need to check what knowledge "
                    "components the student has learned from the conversation.\n";
  out += "Read the conversation between the teacher and the student below.\n\n";
  out += "<conversation>\n";
  for (const auto& m : tail) {
    out += m.role == Role::student ? "Student: " : "Teacher: ";
    out += m.text + "\n";
  }
  out += "</conversation>\n\n";
  out += "<knowledge-components>\n";
  for (std::size_t i : state.missing_indices())
    out += std::to_string(i) + ". " + curriculum.components[i].text + "\n";
  out += "</knowledge-components>\n\n";
  out += "Output the indices of the knowledge components that meet the following two rules.\n";
  out += "Rule 1. " + std::string(kReflectRule1) + "\n";
  out += "Rule 2. " + std::string(kReflectRule2) + "\n\n";
  out +=
      "First, describe the knowledge component that meets the rule, and output only the numbers "
      "in the format of\n"
      "0, 1, 2 at the last line.\n"
      "If there is no knowledge component that meets the rule, output null instead.";
  return out;
}

ReflectParse parse_reflect_output(std::string_view completion, std::size_t component_count) {
  ReflectParse result;
  std::string last;
  std::size_t pos = completion.size();
  while (pos > 0) {
    const auto nl = completion.rfind('\n', pos - 1);
    const auto start = nl == std::string_view::npos ? 0 : nl + 1;
    auto line = trim(completion.substr(start, pos - start));
    if (!line.empty()) {
      last = std::move(line);
      break;
    }
    if (nl == std::string_view::npos) break;
    pos = nl;
  }

  // Tolerate markdown emphasis, code ticks and a closing period.
  std::erase_if(last, [](char c) { return c == '*' || c == '`'; });
  last = trim(last);
  while (!last.empty() && last.back() == '.') last.pop_back();

  if (last.empty()) {
    result.warnings.push_back("reflect output is empty; knowledge unchanged");
    return result;
  }
  if (lower(last) == "null") {
    result.is_null = true;
    result.parsed = true;
    return result;
  }

  std::set<std::size_t> indices;
  std::size_t valid_tokens = 0;
  std::size_t begin = 0;
  while (begin <= last.size()) {
    auto comma = last.find(',', begin);
    if (comma == std::string::npos) comma = last.size();
    const auto token = trim(std::string_view(last).substr(begin, comma - begin));
    begin = comma + 1;
    if (token.empty()) continue;
    const bool numeric = std::all_of(token.begin(), token.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    if (!numeric || token.size() > 9) {
      result.warnings.push_back("ignoring non-numeric reflect token '" + token + "'");
      continue;
    }
    ++valid_tokens;
    const auto index = static_cast<std::size_t>(std::stoul(token));
    if (index >= component_count) {
      result.warnings.push_back("ignoring out-of-range component index " + token);
      continue;
    }
    indices.insert(index);
  }
  if (valid_tokens == 0) {
    result.warnings.push_back("unparseable reflect output '" + last + "'; knowledge unchanged");
    return result;
  }
  result.parsed = true;
  result.indices.assign(indices.begin(), indices.end());
  return result;
}

ReflectResult reflect(const KnowledgeState& state, std::span<const Message> tail,
                      const Curriculum& curriculum, Gateway& gateway,
                      const StudentSettings& settings) {
  state.expect_size(curriculum.components.size());
  ReflectResult result{state, {}, {}};
  if (state.count() == state.size()) return result;  // nothing left to learn

  ChatRequest request;
  request.tag = "reflect";
  request.temperature = settings.reflect_temperature;
  request.messages.push_back({ChatRole::user, assemble_reflect_prompt(state, tail, curriculum)});
  const auto parsed = parse_reflect_output(gateway.complete(request), state.size());

  result.warnings = parsed.warnings;
  for (std::size_t i : parsed.indices) {
    if (!result.state.acquired(i)) {
      result.state.acquire(i);
      result.newly_acquired.push_back(i);
    }
  }
  return result;
}

// --- Respond ---------------------------------------------------------------

std::string render_behavior_block(const StudentProfile& profile, const Curriculum& curriculum) {
  std::string content;
  switch (profile.pipeline) {
    case Pipeline::knowledge_only: return {};
    case Pipeline::ours:
      if (blank(profile.overview.text))
        throw Error(ErrorCode::validation_failed,
                    "profile '" + profile.id + "' uses the ours pipeline but has no trait overview");
      content = trim(profile.overview.text);
      break;
    case Pipeline::baseline:
      content =
          "The direct responses to the student's goal commitment, motivation, self-efficacy, and "
          "stress are below.\n\n" +
          render_trait_responses(profile.ratings);
      content = trim(content);
      break;
  }
  return "For questions not related to " + curriculum.discipline +
         " knowledge, answer according to the following.\n"
         "You should behave as follows in the conversation.\n"
         "<behavior>\n" +
         content + "\n</behavior>\n\n";
}

std::string assemble_respond_system_prompt(const StudentProfile& profile,
                                           const KnowledgeState& state,
                                           const Curriculum& curriculum,
                                           const StudentSettings& settings) {
  state.expect_size(curriculum.components.size());
  std::string out = "You are a " + curriculum.level + " student.\n";
  out += "Forget all the existing knowledge about " + curriculum.topic + ".\n";
  out += "Your conversation partner is a " + curriculum.discipline + " teacher.\n\n";
  out +=
      "You only know the following. Answer questions beyond this content with \"I don't know.\" "
      "or \"I can't remember.\"\n"
      "Never answer questions that cannot be answered by combining the sentences below.\n";
  out += "<knowledge>\n";
  for (std::size_t i : state.acquired_indices()) out += "- " + curriculum.components[i].text + "\n";
  out += "</knowledge>\n\n";
  out += render_behavior_block(profile, curriculum);
  out += "Answer in 2 lines or less. Answer clearly without detailed reasons or additional "
         "explanations.";
  if (settings.anti_repetition) out += "\n" + std::string(kAntiRepetitionInstruction);
  return out;
}

std::vector<ChatTurn> student_view(const Conversation& conversation) {
  std::vector<ChatTurn> turns;
  turns.reserve(conversation.size());
  for (const auto& m : conversation.messages)
    turns.push_back({m.role == Role::pca ? ChatRole::user : ChatRole::assistant, m.text});
  return turns;
}

Message respond(const StudentProfile& profile, const KnowledgeState& state,
                const Conversation& conversation, const Curriculum& curriculum, Gateway& gateway,
                const StudentSettings& settings) {
  ChatRequest request;
  request.tag = "respond";
  request.temperature = settings.respond_temperature;
  request.system = assemble_respond_system_prompt(profile, state, curriculum, settings);
  request.messages = student_view(conversation);
  return student_message(gateway.complete(request), state);
}

// --- Full turn ---------------------------------------------------------------

KnowledgeState current_knowledge(const StudentProfile& profile, const Conversation& conversation) {
  for (auto it = conversation.messages.rbegin(); it != conversation.messages.rend(); ++it)
    if (it->role == Role::student && it->knowledge_snapshot) return *it->knowledge_snapshot;
  return profile.initial_knowledge;
}

StudentTurn student_turn(const StudentProfile& profile, const Conversation& conversation,
                         const Curriculum& curriculum, Gateway& gateway,
                         const StudentSettings& settings) {
  if (conversation.empty() || conversation.back().role != Role::pca)
    throw Error(ErrorCode::validation_failed, "student_turn requires a trailing pca message");
  if (!ready_for_simulation(profile))
    throw Error(ErrorCode::validation_failed,
                "profile '" + profile.id + "' needs a trait overview before simulation");

  StudentTurn turn{Message{}, current_knowledge(profile, conversation), {}};
  if (settings.reflect_enabled) {
    auto r = reflect(turn.state, tail(conversation, settings.reflect_window), curriculum, gateway,
                     settings);
    turn.state = std::move(r.state);
    turn.warnings = std::move(r.warnings);
  }
  turn.message = respond(profile, turn.state, conversation, curriculum, gateway, settings);
  return turn;
}

}  // namespace tutorsim
