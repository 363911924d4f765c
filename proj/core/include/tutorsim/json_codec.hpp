#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/error.hpp"

// Canonical JSON encodings. Field names are snake_case, knowledge states are
// arrays of booleans, and every top-level document carries "schema": 1.
namespace tutorsim {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Throws schema_error for a present-but-unsupported "schema" field.
void check_schema(const json& j, bool required = false);

void to_json(json& j, const KnowledgeComponent& c);
void from_json(const json& j, KnowledgeComponent& c);
void to_json(json& j, const KnowledgeState& s);
void from_json(const json& j, KnowledgeState& s);
void to_json(json& j, const TraitRatings& r);
void from_json(const json& j, TraitRatings& r);
void to_json(json& j, const TraitOverview& o);
void from_json(const json& j, TraitOverview& o);
void to_json(json& j, const StudentProfile& p);
void from_json(const json& j, StudentProfile& p);
void to_json(json& j, const DiagramNode& n);
void from_json(const json& j, DiagramNode& n);
void to_json(json& j, const DiagramEdge& e);
void from_json(const json& j, DiagramEdge& e);
void to_json(json& j, const StateDiagram& d);
void from_json(const json& j, StateDiagram& d);
void to_json(json& j, const ValidationReport& r);
void to_json(json& j, const Message& m);
void from_json(const json& j, Message& m);
void to_json(json& j, const Conversation& c);
void from_json(const json& j, Conversation& c);
void to_json(json& j, const EvalRecord& r);
void from_json(const json& j, EvalRecord& r);
void to_json(json& j, const Curriculum& c);
void from_json(const json& j, Curriculum& c);

// Decodes with nlohmann's type errors mapped onto schema_error.
template <class T>
T decode(const json& j) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("malformed document: ") + e.what());
  }
}

json parse_json_text(const std::string& text);

}  // namespace tutorsim
