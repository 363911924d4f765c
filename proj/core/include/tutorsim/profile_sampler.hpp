#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/error.hpp"

namespace tutorsim {

enum class Level : int { low = 0, medium = 1, high = 2 };

std::string_view to_string(Level level);

// (knowledge, goal_commitment, motivation, self_efficacy, stress), each 0..2.
using LevelVector = std::array<int, 5>;

inline constexpr std::size_t kGridSize = 243;

// All 3^5 vectors in lexicographic order.
std::vector<LevelVector> enumerate_grid();

template <class Point>
int l1_distance(const Point& a, const Point& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return d;
}

// Greedy farthest-point sampling under L1 distance. The first pick is
// points[seed_index]; each later pick maximises the minimum distance to the
// picks so far, ties going to the lexicographically smallest vector.
// Returns indices into `points`.
template <class Point>
std::vector<std::size_t> farthest_point_indices(const std::vector<Point>& points, std::size_t k,
                                                std::size_t seed_index = 0) {
  if (k < 1 || k > points.size())
    throw Error(ErrorCode::k_out_of_range,
                "k must be in [1, " + std::to_string(points.size()) + "], got " + std::to_string(k),
                {{"k", k}, {"points", points.size()}});
  if (seed_index >= points.size())
    throw Error(ErrorCode::out_of_range,
                "seed index " + std::to_string(seed_index) + " outside the point list");

  std::vector<std::size_t> picked{seed_index};
  std::vector<bool> taken(points.size(), false);
  taken[seed_index] = true;
  // min_dist[i] = distance from points[i] to its nearest pick.
  std::vector<int> min_dist(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    min_dist[i] = l1_distance(points[i], points[seed_index]);

  while (picked.size() < k) {
    std::size_t best = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (taken[i]) continue;
      if (best == points.size() || min_dist[i] > min_dist[best] ||
          (min_dist[i] == min_dist[best] && points[i] < points[best]))
        best = i;
    }
    picked.push_back(best);
    taken[best] = true;
    for (std::size_t i = 0; i < points.size(); ++i)
      min_dist[i] = std::min(min_dist[i], l1_distance(points[i], points[best]));
  }
  return picked;
}

template <class Point>
std::vector<Point> farthest_point_sample(const std::vector<Point>& points, std::size_t k,
                                         std::size_t seed_index = 0) {
  std::vector<Point> out;
  for (std::size_t i : farthest_point_indices(points, k, seed_index)) out.push_back(points[i]);
  return out;
}

// Knowledge level -> acquired prefix: low none, medium the first ceil(n/2),
// high all.
KnowledgeState knowledge_for_level(Level level, std::size_t component_count);
// Trait level -> every item 1, 3 or 5.
int rating_for_level(Level level);

// Profile named after its vector (e.g. "K1-GC2-MO0-SE0-ST1"), overview pending.
StudentProfile materialize(const LevelVector& v, const ComponentList& components,
                           Pipeline pipeline = Pipeline::ours);

std::string level_vector_key(const LevelVector& v);
void validate_level_vector(const LevelVector& v);

}  // namespace tutorsim
