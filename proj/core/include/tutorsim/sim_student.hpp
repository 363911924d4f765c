#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/llm_gateway.hpp"

namespace tutorsim {

struct StudentSettings {
  double interpret_temperature = 0.0;
  double reflect_temperature = 0.0;
  double respond_temperature = 1.0;
  bool anti_repetition = true;
  bool reflect_enabled = true;
  std::size_t reflect_window = 2;
};

// Settings of the controlled evaluation runs: every step at temperature 0
// and no repetition instruction.
StudentSettings evaluation_settings();

inline constexpr std::string_view kReflectRule1 =
    "The teacher fully and correctly explained the component in the conversation.";
inline constexpr std::string_view kReflectRule2 =
    "The student themselves correctly stated the component.";
inline constexpr std::string_view kAntiRepetitionInstruction =
    "Do not repeat a reply you have already given in this conversation; vary your wording and "
    "react to what the teacher just said.";

// --- Interpret -------------------------------------------------------------

// Four tagged blocks, one per trait, each item rendered "statement: N (label)".
std::string render_trait_responses(const TraitRatings& ratings);
std::string assemble_interpret_prompt(const TraitRatings& ratings, const Curriculum& curriculum);

TraitOverview interpret(const TraitRatings& ratings, const Curriculum& curriculum, Gateway& gateway,
                        const StudentSettings& settings = {});

// Runs interpret when the profile has no overview, when its ratings changed
// since generation (unedited overviews only), or when forced. Returns true
// if the gateway was called.
bool ensure_overview(StudentProfile& profile, const Curriculum& curriculum, Gateway& gateway,
                     bool force = false, const StudentSettings& settings = {});

// Traits whose name never appears in the overview text (case-insensitive).
std::vector<Trait> missing_trait_sections(std::string_view overview);

// --- Reflect ---------------------------------------------------------------

// Lists only the components not yet acquired, labelled by their 0-based
// index in the full list.
std::string assemble_reflect_prompt(const KnowledgeState& state, std::span<const Message> tail,
                                    const Curriculum& curriculum);

struct ReflectParse {
  std::vector<std::size_t> indices;  // in-range, de-duplicated, ascending
  bool is_null = false;
  bool parsed = false;
  std::vector<std::string> warnings;
};

// Interprets the completion's last non-empty line as comma-separated
// indices or the token "null".
ReflectParse parse_reflect_output(std::string_view completion, std::size_t component_count);

struct ReflectResult {
  KnowledgeState state;
  std::vector<std::size_t> newly_acquired;
  std::vector<std::string> warnings;
};

// state' = state ∪ parsed indices. Never removes a component.
ReflectResult reflect(const KnowledgeState& state, std::span<const Message> tail,
                      const Curriculum& curriculum, Gateway& gateway,
                      const StudentSettings& settings = {});

// --- Respond ---------------------------------------------------------------

// The pipeline-specific part of the Respond prompt; empty for knowledge_only.
std::string render_behavior_block(const StudentProfile& profile, const Curriculum& curriculum);

std::string assemble_respond_system_prompt(const StudentProfile& profile,
                                           const KnowledgeState& state,
                                           const Curriculum& curriculum,
                                           const StudentSettings& settings = {});

// Conversation as seen by the student (pca -> user, student -> assistant).
std::vector<ChatTurn> student_view(const Conversation& conversation);

Message respond(const StudentProfile& profile, const KnowledgeState& state,
                const Conversation& conversation, const Curriculum& curriculum, Gateway& gateway,
                const StudentSettings& settings = {});

// --- Full turn ---------------------------------------------------------------

// Knowledge as of the latest student message, or the profile's initial state.
KnowledgeState current_knowledge(const StudentProfile& profile, const Conversation& conversation);

struct StudentTurn {
  Message message;
  KnowledgeState state;
  std::vector<std::string> warnings;
};

// Reflect (unless disabled) then Respond; the message carries the updated
// knowledge state as its snapshot.
StudentTurn student_turn(const StudentProfile& profile, const Conversation& conversation,
                         const Curriculum& curriculum, Gateway& gateway,
                         const StudentSettings& settings = {});

}  // namespace tutorsim
