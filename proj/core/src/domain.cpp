#include "tutorsim/domain.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tutorsim/error.hpp"

namespace tutorsim {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::validation_failed, message);
}

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

ComponentList make_components(const std::vector<std::string>& texts) {
  ComponentList out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({i, texts[i]});
  validate_components(out);
  return out;
}

void validate_components(const ComponentList& components) {
  require(!components.empty(), "component list must contain at least one component");
  for (std::size_t i = 0; i < components.size(); ++i) {
    require(components[i].index == i,
            "component indices must be contiguous from 0 (found " +
                std::to_string(components[i].index) + " at position " + std::to_string(i) + ")");
    require(!blank(components[i].text), "component " + std::to_string(i) + " has empty text");
  }
}

// --- KnowledgeState --------------------------------------------------------

KnowledgeState KnowledgeState::sized(std::vector<bool> acquired, std::size_t expected) {
  KnowledgeState state(std::move(acquired));
  state.expect_size(expected);
  return state;
}

KnowledgeState KnowledgeState::first_n(std::size_t size, std::size_t n) {
  KnowledgeState state(size);
  for (std::size_t i = 0; i < std::min(size, n); ++i) state.acquired_[i] = true;
  return state;
}

KnowledgeState KnowledgeState::all(std::size_t size) { return first_n(size, size); }

bool KnowledgeState::acquired(std::size_t index) const {
  if (index >= acquired_.size()) {
    throw Error(ErrorCode::out_of_range, "knowledge component index " + std::to_string(index) +
                                             " out of range (size " +
                                             std::to_string(acquired_.size()) + ")");
  }
  return acquired_[index];
}

void KnowledgeState::acquire(std::size_t index) {
  if (index >= acquired_.size()) {
    throw Error(ErrorCode::out_of_range, "knowledge component index " + std::to_string(index) +
                                             " out of range (size " +
                                             std::to_string(acquired_.size()) + ")");
  }
  acquired_[index] = true;
}

std::size_t KnowledgeState::count() const noexcept {
  return static_cast<std::size_t>(std::count(acquired_.begin(), acquired_.end(), true));
}

std::vector<std::size_t> KnowledgeState::acquired_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < acquired_.size(); ++i)
    if (acquired_[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> KnowledgeState::missing_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < acquired_.size(); ++i)
    if (!acquired_[i]) out.push_back(i);
  return out;
}

bool KnowledgeState::includes(const KnowledgeState& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (other.acquired_[i] && !acquired_[i]) return false;
  return true;
}

void KnowledgeState::expect_size(std::size_t expected) const {
  if (acquired_.size() != expected) {
    throw Error(ErrorCode::length_mismatch,
                "knowledge state has " + std::to_string(acquired_.size()) +
                    " entries but the component list has " + std::to_string(expected),
                {{"expected", expected}, {"actual", acquired_.size()}});
  }
}

// --- Traits ----------------------------------------------------------------

std::string_view trait_key(Trait trait) {
  switch (trait) {
    case Trait::goal_commitment: return "goal_commitment";
    case Trait::motivation: return "motivation";
    case Trait::self_efficacy: return "self_efficacy";
    case Trait::stress: return "stress";
  }
  return "";
}

std::string_view trait_label(Trait trait) {
  switch (trait) {
    case Trait::goal_commitment: return "goal commitment";
    case Trait::motivation: return "motivation";
    case Trait::self_efficacy: return "self-efficacy";
    case Trait::stress: return "stress";
  }
  return "";
}

std::string_view trait_abbrev(Trait trait) {
  switch (trait) {
    case Trait::goal_commitment: return "GC";
    case Trait::motivation: return "MO";
    case Trait::self_efficacy: return "SE";
    case Trait::stress: return "ST";
  }
  return "";
}

std::optional<Trait> trait_from_key(std::string_view key) {
  for (Trait t : kTraits)
    if (trait_key(t) == key || trait_abbrev(t) == key) return t;
  return std::nullopt;
}

namespace {

void check_rating(int rating) {
  if (rating < 1 || rating > 5) {
    throw Error(ErrorCode::validation_failed,
                "trait rating " + std::to_string(rating) + " outside [1,5]");
  }
}

}  // namespace

TraitRatings::TraitRatings() {
  for (auto& items : items_) items.fill(3);
}

TraitRatings::TraitRatings(const std::array<Items, 4>& items) : items_(items) {
  for (const auto& trait_items : items_)
    for (int r : trait_items) check_rating(r);
}

TraitRatings TraitRatings::uniform(int rating) {
  check_rating(rating);
  std::array<Items, 4> items{};
  for (auto& trait_items : items) trait_items.fill(rating);
  return TraitRatings(items);
}

int TraitRatings::item(Trait trait, std::size_t i) const {
  if (i >= kItemsPerTrait) throw Error(ErrorCode::out_of_range, "trait item index out of range");
  return items(trait)[i];
}

void TraitRatings::set_item(Trait trait, std::size_t i, int rating) {
  if (i >= kItemsPerTrait) throw Error(ErrorCode::out_of_range, "trait item index out of range");
  check_rating(rating);
  items_[static_cast<std::size_t>(trait)][i] = rating;
}

void TraitRatings::set_items(Trait trait, const Items& items) {
  for (int r : items) check_rating(r);
  items_[static_cast<std::size_t>(trait)] = items;
}

int trait_sum(const TraitRatings& ratings, Trait trait) {
  const auto& items = ratings.items(trait);
  return items[0] + items[1] + items[2];
}

std::array<int, 4> trait_sums(const TraitRatings& ratings) {
  std::array<int, 4> out{};
  for (Trait t : kTraits) out[static_cast<std::size_t>(t)] = trait_sum(ratings, t);
  return out;
}

// --- Profiles --------------------------------------------------------------

std::string_view to_string(Pipeline pipeline) {
  switch (pipeline) {
    case Pipeline::ours: return "ours";
    case Pipeline::baseline: return "baseline";
    case Pipeline::knowledge_only: return "knowledge_only";
  }
  return "";
}

Pipeline pipeline_from_string(std::string_view text) {
  if (text == "ours") return Pipeline::ours;
  if (text == "baseline") return Pipeline::baseline;
  if (text == "knowledge_only") return Pipeline::knowledge_only;
  throw Error(ErrorCode::validation_failed, "unknown pipeline '" + std::string(text) + "'");
}

void validate_profile(const StudentProfile& profile, std::size_t component_count) {
  require(!profile.id.empty(), "profile id must not be empty");
  profile.initial_knowledge.expect_size(component_count);
}

bool ready_for_simulation(const StudentProfile& profile) {
  return profile.pipeline != Pipeline::ours || !blank(profile.overview.text);
}

// --- Diagrams --------------------------------------------------------------

const DiagramNode* StateDiagram::find(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const DiagramNode& StateDiagram::node(std::string_view id) const {
  if (const auto* n = find(id)) return *n;
  throw Error(ErrorCode::not_found, "diagram node '" + std::string(id) + "' not found");
}

const DiagramNode& StateDiagram::root() const { return node(root_id); }

std::vector<std::string> StateDiagram::children(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.parent == id) out.push_back(e.child);
  return out;
}

ValidationReport validate_diagram(const StateDiagram& diagram) {
  ValidationReport report;
  auto& errors = report.errors;

  if (diagram.nodes.empty()) {
    errors.push_back("diagram has no nodes");
    return report;
  }

  std::unordered_set<std::string> ids;
  std::vector<const DiagramNode*> roots;
  for (const auto& n : diagram.nodes) {
    if (n.id.empty()) errors.push_back("node with empty id");
    if (!ids.insert(n.id).second) errors.push_back("duplicate node id '" + n.id + "'");
    if (n.is_root()) {
      roots.push_back(&n);
      if (blank(n.start_message)) errors.push_back("root node '" + n.id + "' has no start message");
      if (blank(n.instruction)) errors.push_back("root node '" + n.id + "' has no instruction");
    } else {
      if (blank(n.behavior)) errors.push_back("node '" + n.id + "' has a blank behavior");
      if (blank(n.instruction)) errors.push_back("node '" + n.id + "' has no instruction");
      if (!n.start_message.empty())
        errors.push_back("node '" + n.id + "' is not the root but has a start message");
    }
  }

  if (roots.empty()) {
    errors.push_back("missing root (no node with empty behavior)");
  } else if (roots.size() > 1) {
    errors.push_back("multiple roots");
  } else if (roots.front()->id != diagram.root_id) {
    errors.push_back("root_id '" + diagram.root_id + "' does not name the root node '" +
                     roots.front()->id + "'");
  }

  std::set<std::pair<std::string, std::string>> seen;
  std::unordered_map<std::string, std::vector<std::string>> adjacency;
  for (const auto& e : diagram.edges) {
    if (!ids.contains(e.parent)) errors.push_back("edge from unknown node '" + e.parent + "'");
    if (!ids.contains(e.child)) errors.push_back("edge to unknown node '" + e.child + "'");
    if (e.parent == e.child) errors.push_back("self-edge on node '" + e.parent + "'");
    if (!seen.insert({e.parent, e.child}).second)
      errors.push_back("duplicate edge '" + e.parent + "' -> '" + e.child + "'");
    adjacency[e.parent].push_back(e.child);
  }

  if (ids.contains(diagram.root_id)) {
    std::unordered_set<std::string> reached{diagram.root_id};
    std::deque<std::string> queue{diagram.root_id};
    while (!queue.empty()) {
      auto current = queue.front();
      queue.pop_front();
      for (const auto& child : adjacency[current])
        if (reached.insert(child).second) queue.push_back(child);
    }
    for (const auto& n : diagram.nodes)
      if (!reached.contains(n.id))
        report.warnings.push_back("node '" + n.id + "' is unreachable from the root");
  }
  return report;
}

// --- Messages and conversations -------------------------------------------

std::string_view to_string(Role role) { return role == Role::pca ? "pca" : "student"; }

Message pca_message(std::string text, std::string node_id) {
  return Message{Role::pca, std::move(text), std::move(node_id), std::nullopt};
}

Message student_message(std::string text, KnowledgeState snapshot) {
  return Message{Role::student, std::move(text), std::nullopt, std::move(snapshot)};
}

void validate_message(const Message& message) {
  if (message.role == Role::pca) {
    require(message.active_node_id.has_value(), "pca message without active_node_id");
    require(!message.knowledge_snapshot.has_value(), "pca message with a knowledge snapshot");
  } else {
    require(message.knowledge_snapshot.has_value(), "student message without knowledge snapshot");
    require(!message.active_node_id.has_value(), "student message with an active_node_id");
  }
}

void Conversation::append(Message message) {
  validate_message(message);
  const Role expected =
      messages.empty() || messages.back().role == Role::student ? Role::pca : Role::student;
  require(message.role == expected, "role alternation violated: expected " +
                                        std::string(to_string(expected)) + " message at index " +
                                        std::to_string(messages.size()));
  messages.push_back(std::move(message));
}

void Conversation::truncate(std::size_t count) {
  if (count < messages.size()) messages.resize(count);
}

bool Conversation::refresh_stale(std::int64_t current_version) {
  stale = diagram_version < current_version;
  return stale;
}

const Message& Conversation::back() const {
  if (messages.empty()) throw Error(ErrorCode::validation_failed, "conversation is empty");
  return messages.back();
}

void validate_conversation(const Conversation& conversation) {
  for (std::size_t i = 0; i < conversation.messages.size(); ++i) {
    const auto& m = conversation.messages[i];
    validate_message(m);
    const Role expected = i % 2 == 0 ? Role::pca : Role::student;
    require(m.role == expected, "role alternation violated at index " + std::to_string(i));
  }
}

std::span<const Message> tail(const Conversation& conversation, std::size_t window) {
  std::span<const Message> all(conversation.messages);
  if (all.size() <= window) return all;
  return all.subspan(all.size() - window);
}

// --- Records ---------------------------------------------------------------

void validate_record(const EvalRecord& record) {
  require(!record.profile_id.empty(), "eval record without profile_id");
  for (int s : record.predicted_trait_sums) {
    if (s < 3 || s > 15)
      throw Error(ErrorCode::out_of_range,
                  "predicted trait sum " + std::to_string(s) + " outside [3,15]");
  }
  for (int b : record.believability) {
    if (b < 1 || b > 5)
      throw Error(ErrorCode::out_of_range,
                  "believability rating " + std::to_string(b) + " outside [1,5]");
  }
}

}  // namespace tutorsim
