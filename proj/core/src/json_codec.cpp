#include "tutorsim/json_codec.hpp"

namespace tutorsim {

void check_schema(const json& j, bool required) {
  if (!j.is_object()) throw Error(ErrorCode::schema_error, "expected a JSON object");
  auto it = j.find("schema");
  if (it == j.end()) {
    if (required) throw Error(ErrorCode::schema_error, "missing schema version");
    return;
  }
  if (!it->is_number_integer() || it->get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::schema_error, "unsupported version " + it->dump(),
                {{"supported", kSchemaVersion}});
  }
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema_error, std::string("invalid JSON: ") + e.what());
  }
}

void to_json(json& j, const KnowledgeComponent& c) { j = {{"index", c.index}, {"text", c.text}}; }

void from_json(const json& j, KnowledgeComponent& c) {
  j.at("index").get_to(c.index);
  j.at("text").get_to(c.text);
}

void to_json(json& j, const KnowledgeState& s) {
  j = json::array();
  for (bool b : s.bits()) j.push_back(b);
}

void from_json(const json& j, KnowledgeState& s) {
  s = KnowledgeState(j.get<std::vector<bool>>());
}

void to_json(json& j, const TraitRatings& r) {
  j = json::object();
  for (Trait t : kTraits) j[std::string(trait_key(t))] = r.items(t);
}

void from_json(const json& j, TraitRatings& r) {
  TraitRatings out;
  for (Trait t : kTraits) out.set_items(t, j.at(std::string(trait_key(t))).get<TraitRatings::Items>());
  r = out;
}

void to_json(json& j, const TraitOverview& o) {
  j = {{"text", o.text}, {"edited", o.edited}};
  j["generated_from"] = o.generated_from ? json(*o.generated_from) : json(nullptr);
}

void from_json(const json& j, TraitOverview& o) {
  o.text = j.value("text", "");
  o.edited = j.value("edited", false);
  o.generated_from.reset();
  if (auto it = j.find("generated_from"); it != j.end() && !it->is_null())
    o.generated_from = it->get<TraitRatings>();
}

void to_json(json& j, const StudentProfile& p) {
  j = {{"schema", kSchemaVersion},
       {"id", p.id},
       {"name", p.name},
       {"initial_knowledge", p.initial_knowledge},
       {"ratings", p.ratings},
       {"trait_overview", p.overview},
       {"pipeline", to_string(p.pipeline)}};
}

void from_json(const json& j, StudentProfile& p) {
  check_schema(j);
  p.id = j.at("id").get<std::string>();
  p.name = j.value("name", p.id);
  p.initial_knowledge = j.at("initial_knowledge").get<KnowledgeState>();
  p.ratings = j.at("ratings").get<TraitRatings>();
  p.overview = j.contains("trait_overview") ? j.at("trait_overview").get<TraitOverview>()
                                            : TraitOverview{};
  p.pipeline = pipeline_from_string(j.value("pipeline", "ours"));
}

void to_json(json& j, const DiagramNode& n) {
  j = {{"id", n.id},
       {"behavior", n.behavior},
       {"instruction", n.instruction},
       {"start_message", n.start_message}};
}

void from_json(const json& j, DiagramNode& n) {
  n.id = j.at("id").get<std::string>();
  n.behavior = j.value("behavior", "");
  n.instruction = j.value("instruction", "");
  n.start_message = j.value("start_message", "");
}

void to_json(json& j, const DiagramEdge& e) { j = {{"parent", e.parent}, {"child", e.child}}; }

void from_json(const json& j, DiagramEdge& e) {
  e.parent = j.at("parent").get<std::string>();
  e.child = j.at("child").get<std::string>();
}

void to_json(json& j, const StateDiagram& d) {
  j = {{"schema", kSchemaVersion}, {"root_id", d.root_id}, {"nodes", d.nodes}, {"edges", d.edges}};
}

void from_json(const json& j, StateDiagram& d) {
  check_schema(j);
  d.root_id = j.at("root_id").get<std::string>();
  d.nodes = j.at("nodes").get<std::vector<DiagramNode>>();
  d.edges = j.value("edges", std::vector<DiagramEdge>{});
}

void to_json(json& j, const ValidationReport& r) {
  j = {{"ok", r.ok()}, {"errors", r.errors}, {"warnings", r.warnings}};
}

void to_json(json& j, const Message& m) {
  j = {{"role", to_string(m.role)}, {"text", m.text}};
  if (m.active_node_id) j["active_node_id"] = *m.active_node_id;
  if (m.knowledge_snapshot) j["knowledge_snapshot"] = *m.knowledge_snapshot;
}

void from_json(const json& j, Message& m) {
  const auto role = j.at("role").get<std::string>();
  if (role == "pca") {
    m.role = Role::pca;
  } else if (role == "student") {
    m.role = Role::student;
  } else {
    throw Error(ErrorCode::schema_error, "unknown message role '" + role + "'");
  }
  m.text = j.at("text").get<std::string>();
  m.active_node_id.reset();
  m.knowledge_snapshot.reset();
  if (auto it = j.find("active_node_id"); it != j.end() && !it->is_null())
    m.active_node_id = it->get<std::string>();
  if (auto it = j.find("knowledge_snapshot"); it != j.end() && !it->is_null())
    m.knowledge_snapshot = it->get<KnowledgeState>();
}

void to_json(json& j, const Conversation& c) {
  j = {{"schema", kSchemaVersion},
       {"id", c.id},
       {"diagram_version", c.diagram_version},
       {"stale", c.stale},
       {"messages", c.messages}};
}

void from_json(const json& j, Conversation& c) {
  check_schema(j);
  c.id = j.at("id").get<std::string>();
  c.diagram_version = j.at("diagram_version").get<std::int64_t>();
  c.stale = j.value("stale", false);
  c.messages = j.at("messages").get<std::vector<Message>>();
  validate_conversation(c);
}

void to_json(json& j, const EvalRecord& r) {
  j = {{"schema", kSchemaVersion},
       {"profile_id", r.profile_id},
       {"rater_id", r.rater_id},
       {"predicted_knowledge", r.predicted_knowledge},
       {"predicted_trait_sums", r.predicted_trait_sums},
       {"believability", r.believability}};
}

void from_json(const json& j, EvalRecord& r) {
  check_schema(j);
  r.profile_id = j.at("profile_id").get<std::string>();
  r.rater_id = j.value("rater_id", "");
  r.predicted_knowledge = j.at("predicted_knowledge").get<KnowledgeState>();
  r.predicted_trait_sums = j.at("predicted_trait_sums").get<std::array<int, 4>>();
  r.believability = j.at("believability").get<std::array<int, 3>>();
  validate_record(r);
}

void to_json(json& j, const Curriculum& c) {
  j = {{"level", c.level},
       {"discipline", c.discipline},
       {"subject", c.subject},
       {"topic", c.topic},
       {"components", c.components}};
}

void from_json(const json& j, Curriculum& c) {
  Curriculum defaults;
  c.level = j.value("level", defaults.level);
  c.discipline = j.value("discipline", defaults.discipline);
  c.subject = j.value("subject", defaults.subject);
  c.topic = j.value("topic", defaults.topic);
  c.components = j.at("components").get<ComponentList>();
  validate_components(c.components);
}

}  // namespace tutorsim
