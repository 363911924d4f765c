#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tutorsim {

// ---------------------------------------------------------------------------
// Knowledge
// ---------------------------------------------------------------------------

struct KnowledgeComponent {
  std::size_t index = 0;
  std::string text;

  friend bool operator==(const KnowledgeComponent&, const KnowledgeComponent&) = default;
};

using ComponentList = std::vector<KnowledgeComponent>;

// Builds a 0-indexed component list; throws validation_failed on empty text
// or an empty list.
ComponentList make_components(const std::vector<std::string>& texts);
void validate_components(const ComponentList& components);

/// Acquired/not-acquired flag per knowledge component.
///
/// The length is fixed at construction and must match the project's
/// component list; mismatches raise length_mismatch instead of truncating.
class KnowledgeState {
 public:
  KnowledgeState() = default;
  explicit KnowledgeState(std::size_t size) : acquired_(size, false) {}
  explicit KnowledgeState(std::vector<bool> acquired) : acquired_(std::move(acquired)) {}

  // Checked construction against an expected component count.
  static KnowledgeState sized(std::vector<bool> acquired, std::size_t expected);
  static KnowledgeState first_n(std::size_t size, std::size_t n);
  static KnowledgeState all(std::size_t size);

  std::size_t size() const noexcept { return acquired_.size(); }
  bool acquired(std::size_t index) const;
  void acquire(std::size_t index);
  std::size_t count() const noexcept;
  const std::vector<bool>& bits() const noexcept { return acquired_; }
  std::vector<std::size_t> acquired_indices() const;
  std::vector<std::size_t> missing_indices() const;

  // True when every component acquired in `other` is also acquired here.
  bool includes(const KnowledgeState& other) const;
  void expect_size(std::size_t expected) const;

  friend bool operator==(const KnowledgeState&, const KnowledgeState&) = default;

 private:
  std::vector<bool> acquired_;
};

// ---------------------------------------------------------------------------
// Traits
// ---------------------------------------------------------------------------

enum class Trait { goal_commitment = 0, motivation = 1, self_efficacy = 2, stress = 3 };

inline constexpr std::array<Trait, 4> kTraits = {
    Trait::goal_commitment, Trait::motivation, Trait::self_efficacy, Trait::stress};
inline constexpr std::size_t kItemsPerTrait = 3;

std::string_view trait_key(Trait trait);     // goal_commitment
std::string_view trait_label(Trait trait);   // goal commitment
std::string_view trait_abbrev(Trait trait);  // GC
std::optional<Trait> trait_from_key(std::string_view key);

// Likert item ratings, 4 traits x 3 items, each in [1,5].
class TraitRatings {
 public:
  using Items = std::array<int, kItemsPerTrait>;

  TraitRatings();  // all items neutral (3)
  explicit TraitRatings(const std::array<Items, 4>& items);
  static TraitRatings uniform(int rating);

  const Items& items(Trait trait) const { return items_[static_cast<std::size_t>(trait)]; }
  int item(Trait trait, std::size_t i) const;
  void set_item(Trait trait, std::size_t i, int rating);
  void set_items(Trait trait, const Items& items);

  friend bool operator==(const TraitRatings&, const TraitRatings&) = default;

 private:
  std::array<Items, 4> items_{};
};

// Sum of the trait's three items, in [3,15].
int trait_sum(const TraitRatings& ratings, Trait trait);
std::array<int, 4> trait_sums(const TraitRatings& ratings);

// ---------------------------------------------------------------------------
// Student profiles
// ---------------------------------------------------------------------------

enum class Pipeline { ours, baseline, knowledge_only };

std::string_view to_string(Pipeline pipeline);
Pipeline pipeline_from_string(std::string_view text);

struct TraitOverview {
  std::string text;
  std::optional<TraitRatings> generated_from;
  bool edited = false;

  friend bool operator==(const TraitOverview&, const TraitOverview&) = default;
};

struct StudentProfile {
  std::string id;
  std::string name;
  KnowledgeState initial_knowledge;
  TraitRatings ratings;
  TraitOverview overview;
  Pipeline pipeline = Pipeline::ours;

  friend bool operator==(const StudentProfile&, const StudentProfile&) = default;
};

void validate_profile(const StudentProfile& profile, std::size_t component_count);
// The `ours` pipeline cannot simulate until a trait overview exists.
bool ready_for_simulation(const StudentProfile& profile);

// ---------------------------------------------------------------------------
// State diagrams
// ---------------------------------------------------------------------------

struct DiagramNode {
  std::string id;
  std::string behavior;  // empty iff root
  std::string instruction;
  std::string start_message;  // root only

  bool is_root() const noexcept { return behavior.empty(); }
  friend bool operator==(const DiagramNode&, const DiagramNode&) = default;
};

struct DiagramEdge {
  std::string parent;
  std::string child;

  friend bool operator==(const DiagramEdge&, const DiagramEdge&) = default;
};

struct StateDiagram {
  std::vector<DiagramNode> nodes;
  std::vector<DiagramEdge> edges;
  std::string root_id;

  const DiagramNode* find(std::string_view id) const;
  const DiagramNode& node(std::string_view id) const;  // throws not_found
  const DiagramNode& root() const;
  // Direct children in edge insertion order.
  std::vector<std::string> children(std::string_view id) const;

  friend bool operator==(const StateDiagram&, const StateDiagram&) = default;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

ValidationReport validate_diagram(const StateDiagram& diagram);

// ---------------------------------------------------------------------------
// Conversations
// ---------------------------------------------------------------------------

enum class Role { pca, student };

std::string_view to_string(Role role);

struct Message {
  Role role = Role::pca;
  std::string text;
  std::optional<std::string> active_node_id;        // pca messages only
  std::optional<KnowledgeState> knowledge_snapshot;  // student messages only

  friend bool operator==(const Message&, const Message&) = default;
};

Message pca_message(std::string text, std::string node_id);
Message student_message(std::string text, KnowledgeState snapshot);

struct Conversation {
  std::string id;
  std::int64_t diagram_version = 0;
  std::vector<Message> messages;
  bool stale = false;

  // Appends after checking role alternation and annotations.
  void append(Message message);
  void truncate(std::size_t count);
  // Recomputes `stale` against the project's current diagram version.
  bool refresh_stale(std::int64_t current_version);

  std::size_t size() const noexcept { return messages.size(); }
  bool empty() const noexcept { return messages.empty(); }
  const Message& back() const;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

void validate_message(const Message& message);
void validate_conversation(const Conversation& conversation);

// The last `window` messages (or fewer).
std::span<const Message> tail(const Conversation& conversation, std::size_t window);

// ---------------------------------------------------------------------------
// Evaluation records
// ---------------------------------------------------------------------------

struct EvalRecord {
  std::string profile_id;
  std::string rater_id;
  KnowledgeState predicted_knowledge;
  std::array<int, 4> predicted_trait_sums{3, 3, 3, 3};
  std::array<int, 3> believability{3, 3, 3};

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

void validate_record(const EvalRecord& record);

}  // namespace tutorsim
