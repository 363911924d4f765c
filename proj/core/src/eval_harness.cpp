#include "tutorsim/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tutorsim/error.hpp"
#include "tutorsim/json_codec.hpp"
#include "tutorsim/pca_engine.hpp"

namespace tutorsim {

std::string_view to_string(ScriptKind kind) {
  return kind == ScriptKind::interview ? "interview" : "lesson";
}

namespace {

ScriptKind script_kind_from_string(const std::string& text) {
  if (text == "interview") return ScriptKind::interview;
  if (text == "lesson") return ScriptKind::lesson;
  throw Error(ErrorCode::schema_error, "unknown dialogue script kind '" + text + "'");
}

bool blank(const std::string& text) {
  return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

// Quizzes written against the default curriculum, one per component.
const std::vector<std::string>& default_quizzes() {
  static const std::vector<std::string> quizzes = {
      "How are the particles arranged in a solid, and does a solid keep its shape and volume?",
      "What happens to the shape and volume of a liquid when you pour it into a different "
      "container?",
      "How do gas particles behave, and what happens to a gas released into a room?",
      "What is a phase change, and what can make a substance change its state?",
      "When water freezes into ice, do the properties of the substance change? Why or why not?",
      "If 10 g of ice melts completely, what is the mass of the water? Explain why.",
  };
  return quizzes;
}

const std::vector<std::string>& default_trait_questions() {
  static const std::vector<std::string> questions = {
      "How committed are you to doing well in this science unit?",
      "Do you think learning about the states of matter is a worthwhile goal for you?",
      "Would you put in more effort than usual to master this topic?",
      "When you get stuck on a science problem, what do you usually do?",
      "If you don't understand something right away, do you try to learn more about it?",
      "How do you feel when you realize you have learned something new?",
      "Do you think you are the kind of person who is good at science?",
      "Do you believe you can do well in science?",
      "How much pressure do you feel in your daily studying?",
      "Do your future education and job plans make you feel pressure about school?",
  };
  return questions;
}

Transcript fail(Transcript t, const Error& e) {
  t.complete = false;
  t.error_code = std::string(to_string(e.code()));
  t.error_message = e.what();
  return t;
}

}  // namespace

DialogueScript default_interview_script(const Curriculum& curriculum) {
  DialogueScript s;
  s.kind = ScriptKind::interview;
  const bool stock = curriculum.components == default_curriculum().components;
  for (const auto& c : curriculum.components) {
    if (stock) {
      s.lines.push_back(default_quizzes()[c.index]);
    } else {
      s.lines.push_back("Quiz " + std::to_string(c.index + 1) + ": tell me what you know about " +
                        curriculum.subject + ", part " + std::to_string(c.index + 1) + ".");
    }
  }
  for (const auto& q : default_trait_questions()) s.lines.push_back(q);
  s.trait_question_count = default_trait_questions().size();
  return s;
}

DialogueScript default_lesson_script(const Curriculum& curriculum) {
  DialogueScript s;
  s.kind = ScriptKind::lesson;
  s.message_count = kLessonMessages;
  std::string p = "You are a " + curriculum.discipline + " tutor teaching a " + curriculum.level +
                  " student about " + curriculum.subject + ".\n";
  p += "Teach the following knowledge components over the lesson, one or two at a time, and "
       "check the student's understanding as you go.\n";
  for (const auto& c : curriculum.components) p += "- " + c.text + "\n";
  p += "\nWrite one short message of 2-3 lines per turn.";
  s.tutor_system_prompt = std::move(p);
  return s;
}

void validate_script(const DialogueScript& script, std::size_t component_count) {
  if (script.kind == ScriptKind::interview) {
    const auto expected = component_count + script.trait_question_count;
    if (script.lines.size() != expected)
      throw Error(ErrorCode::validation_failed,
                  "interview needs " + std::to_string(expected) + " lines (components + trait "
                  "questions), got " + std::to_string(script.lines.size()));
    for (std::size_t i = 0; i < script.lines.size(); ++i)
      if (blank(script.lines[i]))
        throw Error(ErrorCode::validation_failed,
                    "interview line " + std::to_string(i) + " is blank");
  } else {
    if (blank(script.tutor_system_prompt))
      throw Error(ErrorCode::validation_failed, "lesson script has no tutor system prompt");
    if (script.message_count < 1)
      throw Error(ErrorCode::validation_failed, "lesson needs at least one tutor message");
  }
}

void to_json(nlohmann::json& j, const DialogueScript& s) {
  j = {{"schema", kSchemaVersion}, {"kind", to_string(s.kind)}};
  if (s.kind == ScriptKind::interview) {
    j["lines"] = s.lines;
    j["trait_question_count"] = s.trait_question_count;
  } else {
    j["tutor_system_prompt"] = s.tutor_system_prompt;
    j["message_count"] = s.message_count;
  }
}

void from_json(const nlohmann::json& j, DialogueScript& s) {
  check_schema(j);
  s = DialogueScript{};
  s.kind = script_kind_from_string(j.at("kind").get<std::string>());
  if (s.kind == ScriptKind::interview) {
    s.lines = j.at("lines").get<std::vector<std::string>>();
    s.trait_question_count = j.value("trait_question_count", kTraitQuestionCount);
  } else {
    s.tutor_system_prompt = j.at("tutor_system_prompt").get<std::string>();
    s.message_count = j.value("message_count", kLessonMessages);
  }
}

void to_json(nlohmann::json& j, const Transcript& t) {
  j = {{"schema", kSchemaVersion},
       {"profile_id", t.profile_id},
       {"kind", to_string(t.kind)},
       {"complete", t.complete},
       {"conversation", t.conversation}};
  if (t.error_code) j["error"] = {{"code", *t.error_code}, {"message", t.error_message}};
  else j["error"] = nullptr;
}

Transcript run_interview(const StudentProfile& profile, const DialogueScript& script,
                         const Curriculum& curriculum, Gateway& student_gateway,
                         StudentSettings settings) {
  if (script.kind != ScriptKind::interview)
    throw Error(ErrorCode::validation_failed, "run_interview needs an interview script");
  validate_script(script, curriculum.components.size());
  validate_profile(profile, curriculum.components.size());
  settings.reflect_enabled = false;

  Transcript t;
  t.profile_id = profile.id;
  t.kind = ScriptKind::interview;
  t.conversation.id = profile.id + "-interview";
  try {
    for (const auto& line : script.lines) {
      t.conversation.append(pca_message(line, std::string(kInterviewerNode)));
      auto turn = student_turn(profile, t.conversation, curriculum, student_gateway, settings);
      t.conversation.append(std::move(turn.message));
    }
  } catch (const Error& e) {
    return fail(std::move(t), e);
  }
  t.complete = true;
  return t;
}

Transcript run_lesson(const StudentProfile& profile, const DialogueScript& script,
                      const Curriculum& curriculum, Gateway& tutor_gateway,
                      Gateway& student_gateway, StudentSettings settings) {
  if (script.kind != ScriptKind::lesson)
    throw Error(ErrorCode::validation_failed, "run_lesson needs a lesson script");
  validate_script(script, curriculum.components.size());
  validate_profile(profile, curriculum.components.size());

  Transcript t;
  t.profile_id = profile.id;
  t.kind = ScriptKind::lesson;
  t.conversation.id = profile.id + "-lesson";
  try {
    for (std::size_t i = 0; i < script.message_count; ++i) {
      ChatRequest request;
      request.tag = "tutor";
      request.temperature = 0.0;
      request.system = script.tutor_system_prompt;
      request.messages = pca_view(t.conversation);
      t.conversation.append(pca_message(tutor_gateway.complete(request), std::string(kTutorNode)));
      auto turn = student_turn(profile, t.conversation, curriculum, student_gateway, settings);
      t.conversation.append(std::move(turn.message));
    }
  } catch (const Error& e) {
    return fail(std::move(t), e);
  }
  t.complete = true;
  return t;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double knowledge_bias(const KnowledgeState& configured, const KnowledgeState& predicted) {
  if (configured.size() != predicted.size())
    throw Error(ErrorCode::length_mismatch,
                "knowledge states differ in length: " + std::to_string(configured.size()) +
                    " vs " + std::to_string(predicted.size()));
  if (configured.size() == 0)
    throw Error(ErrorCode::length_mismatch, "knowledge states are empty");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < configured.size(); ++i)
    wrong += configured.acquired(i) != predicted.acquired(i);
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(configured.size());
}

std::array<int, 4> trait_bias(const TraitRatings& configured,
                              const std::array<int, 4>& predicted_sums) {
  std::array<int, 4> out{};
  const auto sums = trait_sums(configured);
  for (std::size_t t = 0; t < 4; ++t) {
    if (predicted_sums[t] < 3 || predicted_sums[t] > 15)
      throw Error(ErrorCode::out_of_range, "predicted " + std::string(trait_abbrev(kTraits[t])) +
                                               " sum " + std::to_string(predicted_sums[t]) +
                                               " outside [3,15]");
    out[t] = std::abs(predicted_sums[t] - sums[t]);
  }
  return out;
}

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd r;
  r.n = values.size();
  if (values.empty()) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  }
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::empty_records, "median of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::length_mismatch, "pearson inputs differ in length");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean_sd(x).mean;
  const double my = mean_sd(y).mean;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

BelievabilitySummary believability_summary(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::empty_records, "no evaluation records");
  BelievabilitySummary s;
  std::array<std::vector<double>, 3> all;
  // Ordered by first appearance so the result is independent of map order.
  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<double>, 3>> by_profile;
  for (const auto& r : records) {
    validate_record(r);
    auto [it, inserted] = by_profile.try_emplace(r.profile_id);
    if (inserted) order.push_back(r.profile_id);
    for (std::size_t b = 0; b < 3; ++b) {
      all[b].push_back(r.believability[b]);
      it->second[b].push_back(r.believability[b]);
    }
  }
  std::array<std::vector<double>, 3> profile_means;
  for (const auto& id : order)
    for (std::size_t b = 0; b < 3; ++b)
      profile_means[b].push_back(mean_sd(by_profile[id][b]).mean);
  for (std::size_t b = 0; b < 3; ++b) {
    s.statements[b] = mean_sd(all[b]);
    s.profile_sd[b] = mean_sd(profile_means[b]).sd;
  }
  s.profiles = order.size();
  s.pearson_b1_b3 = pearson(profile_means[0], profile_means[2]);
  return s;
}

}  // namespace tutorsim
