#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/llm_gateway.hpp"
#include "tutorsim/sim_student.hpp"

namespace tutorsim {

// ---------------------------------------------------------------------------
// Dialogue scripts
// ---------------------------------------------------------------------------

enum class ScriptKind { interview, lesson };

std::string_view to_string(ScriptKind kind);

inline constexpr std::size_t kTraitQuestionCount = 10;
inline constexpr std::size_t kLessonMessages = 12;
inline constexpr std::string_view kInterviewerNode = "interviewer";
inline constexpr std::string_view kTutorNode = "tutor";

struct DialogueScript {
  ScriptKind kind = ScriptKind::interview;
  std::vector<std::string> lines;        // interview: fixed interviewer lines
  std::size_t trait_question_count = 0;  // interview: trailing lines that probe traits
  std::string tutor_system_prompt;       // lesson
  std::size_t message_count = kLessonMessages;  // lesson: tutor messages

  friend bool operator==(const DialogueScript&, const DialogueScript&) = default;
};

// One quiz per component followed by the ten trait questions
// (GC1-3, MO1-3, SE1-2, ST1-2).
DialogueScript default_interview_script(const Curriculum& curriculum);
DialogueScript default_lesson_script(const Curriculum& curriculum);

// Interview: lines == |components| + trait_question_count, none blank.
// Lesson: non-blank prompt, message_count >= 1.
void validate_script(const DialogueScript& script, std::size_t component_count);

void to_json(nlohmann::json& j, const DialogueScript& s);
void from_json(const nlohmann::json& j, DialogueScript& s);

// ---------------------------------------------------------------------------
// Dialogue runs
// ---------------------------------------------------------------------------

struct Transcript {
  std::string profile_id;
  ScriptKind kind = ScriptKind::interview;
  Conversation conversation;
  bool complete = false;
  std::optional<std::string> error_code;
  std::string error_message;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

void to_json(nlohmann::json& j, const Transcript& t);

// Interviewer lines alternate with student turns; Reflect is disabled so the
// configured knowledge state is what gets probed. Gateway errors stop the
// run and leave a partial, flagged transcript.
Transcript run_interview(const StudentProfile& profile, const DialogueScript& script,
                         const Curriculum& curriculum, Gateway& student_gateway,
                         StudentSettings settings = evaluation_settings());

// Tutor messages come from `tutor_gateway` under the script's system prompt;
// student turns run the full Reflect-Respond loop.
Transcript run_lesson(const StudentProfile& profile, const DialogueScript& script,
                      const Curriculum& curriculum, Gateway& tutor_gateway,
                      Gateway& student_gateway, StudentSettings settings = evaluation_settings());

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// 100 * Hamming(configured, predicted) / length.
double knowledge_bias(const KnowledgeState& configured, const KnowledgeState& predicted);

// |predicted_sum - configured_sum| per trait, each in [0,12].
std::array<int, 4> trait_bias(const TraitRatings& configured,
                              const std::array<int, 4>& predicted_sums);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 when n < 2
  std::size_t n = 0;

  friend bool operator==(const MeanSd&, const MeanSd&) = default;
};

MeanSd mean_sd(const std::vector<double>& values);
double median(std::vector<double> values);
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct BelievabilitySummary {
  // Mean and sd over all records, per statement B1..B3.
  std::array<MeanSd, 3> statements{};
  // Sd of per-profile means, per statement.
  std::array<double, 3> profile_sd{};
  // Pearson r over per-profile B1 and B3 means; absent when undefined.
  std::optional<double> pearson_b1_b3;
  std::size_t profiles = 0;
};

BelievabilitySummary believability_summary(const std::vector<EvalRecord>& records);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ProfileBias {
  std::string profile_id;
  std::string name;
  Pipeline pipeline = Pipeline::ours;
  std::size_t raters = 0;
  MeanSd knowledge;                 // percent
  std::array<double, 4> trait_mae{};  // per trait, over raters
  std::array<MeanSd, 3> believability{};
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

struct PipelineSummary {
  Pipeline pipeline = Pipeline::ours;
  std::vector<ProfileBias> profiles;  // order of first appearance
  Aggregate knowledge;                // over per-profile knowledge means
  Aggregate trait;                    // over per-(profile, trait) MAE cells
  BelievabilitySummary believability;
};

struct BiasReport {
  std::vector<PipelineSummary> pipelines;  // baseline, ours, knowledge_only
  std::size_t records = 0;
};

// Records must reference known profiles and match their component count.
BiasReport build_report(const std::vector<StudentProfile>& profiles,
                        const std::vector<EvalRecord>& records);

Aggregate aggregate(const std::vector<double>& values);

nlohmann::json report_json(const BiasReport& report);
std::string report_markdown(const BiasReport& report);

struct RecordCorpus {
  std::vector<StudentProfile> profiles;
  std::vector<EvalRecord> records;
};

// Directory with profiles.json plus any number of rater files, read in
// file-name order. A rater file holds {"schema":1,"records":[...]} or a
// bare array of records.
RecordCorpus load_record_corpus(const std::string& directory);

}  // namespace tutorsim
