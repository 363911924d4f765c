#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/llm_gateway.hpp"

namespace tutorsim {

struct TransitionLogEntry {
  std::size_t turn = 0;           // 1-based count of student messages processed
  std::size_t message_index = 0;  // index of the student message that triggered it
  std::string from_node;
  std::vector<std::string> options_presented;  // child node ids, in option order
  std::optional<std::string> raw_answer;       // absent when no call was made
  std::string chosen;                          // active node after the transition
  bool stayed = true;
  std::string note;

  friend bool operator==(const TransitionLogEntry&, const TransitionLogEntry&) = default;
};

// Routing state of one conversation. The active node only changes inside
// transition(), and every call appends exactly one log entry.
struct EngineState {
  std::string active_node_id;
  std::vector<TransitionLogEntry> transition_log;

  friend bool operator==(const EngineState&, const EngineState&) = default;
};

struct PcaSettings {
  double temperature = 0.0;
  std::size_t master_window = 6;
};

inline constexpr double kMasterTemperature = 0.0;
inline constexpr std::string_view kNoneOfTheAbove = "None of the above";

// Fresh engine at the root, or at `start_node` when given (must exist).
EngineState start_engine(const StateDiagram& diagram,
                         const std::optional<std::string>& start_node = std::nullopt);

// Master-agent user prompt: transcript as Student:/Chatbot: lines, options
// 1..k followed by k+1 "None of the above", then "Answer (write in numbers):".
std::string assemble_master_prompt(std::span<const Message> tail,
                                   std::span<const std::string> options);

// First unsigned integer in the reply, if any.
std::optional<std::size_t> parse_master_answer(std::string_view reply);

// Routes the engine after the latest student message. Leaf nodes make no
// LLM call. Out-of-range, "none of the above" and unparseable replies keep
// the current node. Returns the (possibly unchanged) active node id.
std::string transition(EngineState& state, const StateDiagram& diagram,
                       const Conversation& conversation, Gateway& gateway,
                       std::size_t window = PcaSettings{}.master_window);

// PCA system prompt for `node`: teacher preamble, every component as a
// bullet, the brevity directive and the node instruction in <instruction>.
std::string assemble_pca_system_prompt(const DiagramNode& node, const Curriculum& curriculum);

// Conversation as seen by the PCA (pca -> assistant, student -> user).
std::vector<ChatTurn> pca_view(const Conversation& conversation);

// Next PCA message. An empty conversation yields the root start message
// verbatim without calling the gateway.
Message pca_respond(const EngineState& state, const StateDiagram& diagram,
                    const Conversation& conversation, const Curriculum& curriculum,
                    Gateway& gateway, const PcaSettings& settings = {});

void write_transition_log_jsonl(const EngineState& state, std::ostream& out);

void to_json(nlohmann::json& j, const TransitionLogEntry& e);
void from_json(const nlohmann::json& j, TransitionLogEntry& e);
void to_json(nlohmann::json& j, const EngineState& s);
void from_json(const nlohmann::json& j, EngineState& s);

}  // namespace tutorsim
