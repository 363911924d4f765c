#include "tutorsim/profile_sampler.hpp"

namespace tutorsim {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::low: return "low";
    case Level::medium: return "medium";
    case Level::high: return "high";
  }
  return "low";
}

std::vector<LevelVector> enumerate_grid() {
  std::vector<LevelVector> grid;
  grid.reserve(kGridSize);
  for (int code = 0; code < static_cast<int>(kGridSize); ++code) {
    LevelVector v{};
    int rest = code;
    for (int d = 4; d >= 0; --d) {
      v[static_cast<std::size_t>(d)] = rest % 3;
      rest /= 3;
    }
    grid.push_back(v);
  }
  return grid;
}

void validate_level_vector(const LevelVector& v) {
  for (int x : v)
    if (x < 0 || x > 2)
      throw Error(ErrorCode::validation_failed,
                  "level " + std::to_string(x) + " outside {0,1,2}");
}

KnowledgeState knowledge_for_level(Level level, std::size_t component_count) {
  switch (level) {
    case Level::low: return KnowledgeState(component_count);
    case Level::medium: return KnowledgeState::first_n(component_count, (component_count + 1) / 2);
    case Level::high: return KnowledgeState::all(component_count);
  }
  return KnowledgeState(component_count);
}

int rating_for_level(Level level) { return 1 + 2 * static_cast<int>(level); }

std::string level_vector_key(const LevelVector& v) {
  static constexpr std::array<std::string_view, 5> prefixes = {"K", "GC", "MO", "SE", "ST"};
  std::string key;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) key += '-';
    key += prefixes[i];
    key += std::to_string(v[i]);
  }
  return key;
}

StudentProfile materialize(const LevelVector& v, const ComponentList& components,
                           Pipeline pipeline) {
  validate_level_vector(v);
  validate_components(components);
  StudentProfile p;
  p.id = level_vector_key(v) + "-" + std::string(to_string(pipeline));
  p.name = level_vector_key(v);
  p.pipeline = pipeline;
  p.initial_knowledge = knowledge_for_level(static_cast<Level>(v[0]), components.size());
  for (std::size_t t = 0; t < kTraits.size(); ++t) {
    const int r = rating_for_level(static_cast<Level>(v[t + 1]));
    p.ratings.set_items(kTraits[t], {r, r, r});
  }
  return p;
}

}  // namespace tutorsim
