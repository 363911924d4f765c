#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tutorsim/profile_sampler.hpp"
#include "tutorsim/workbench.hpp"

using namespace tutorsim;

namespace {

// Independent max-min oracle: every step recomputes each candidate's
// distance to the whole picked set from scratch.
template <class Point>
std::vector<Point> oracle_fps(const std::vector<Point>& points, std::size_t k, std::size_t seed) {
  std::vector<Point> picked{points[seed]};
  while (picked.size() < k) {
    std::optional<Point> best;
    int best_d = -1;
    for (const auto& p : points) {
      if (std::find(picked.begin(), picked.end(), p) != picked.end()) continue;
      int d = 1 << 30;
      for (const auto& q : picked) {
        int s = 0;
        for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
        d = std::min(d, s);
      }
      if (d > best_d || (d == best_d && p < *best)) {
        best = p;
        best_d = d;
      }
    }
    picked.push_back(*best);
  }
  return picked;
}

std::vector<std::array<int, 3>> cube_corners() {
  std::vector<std::array<int, 3>> out;
  for (int a : {0, 2})
    for (int b : {0, 2})
      for (int c : {0, 2}) out.push_back({a, b, c});
  return out;
}

}  // namespace

TEST(Grid, Has243DistinctSortedVectors) {
  const auto grid = enumerate_grid();
  ASSERT_EQ(grid.size(), kGridSize);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(std::set<LevelVector>(grid.begin(), grid.end()).size(), 243u);
  EXPECT_EQ(grid.front(), (LevelVector{0, 0, 0, 0, 0}));
  EXPECT_EQ(grid.back(), (LevelVector{2, 2, 2, 2, 2}));
}

TEST(Fps, MatchesOracleOnFullGrid) {
  const auto grid = enumerate_grid();
  for (std::size_t k : {1u, 2u, 9u, 20u}) {
    for (std::size_t seed : {0u, 121u, 242u}) {
      EXPECT_EQ(farthest_point_sample(grid, k, seed), oracle_fps(grid, k, seed))
          << "k=" << k << " seed=" << seed;
    }
  }
}

TEST(Fps, MatchesOracleOnCubeCorners) {
  const auto corners = cube_corners();
  for (std::size_t k = 1; k <= corners.size(); ++k)
    EXPECT_EQ(farthest_point_sample(corners, k, 0), oracle_fps(corners, k, 0));
  // From the origin the opposite corner is farthest.
  EXPECT_EQ(farthest_point_sample(corners, 2, 0)[1], (std::array<int, 3>{2, 2, 2}));
}

TEST(Fps, SecondPickFromOriginIsAllHigh) {
  const auto picks = farthest_point_sample(enumerate_grid(), 9, 0);
  EXPECT_EQ(picks[0], (LevelVector{0, 0, 0, 0, 0}));
  EXPECT_EQ(picks[1], (LevelVector{2, 2, 2, 2, 2}));
}

TEST(Fps, GreedyStepIsOptimal) {
  const auto grid = enumerate_grid();
  const auto idx = farthest_point_indices(grid, 15, 0);
  for (std::size_t step = 1; step < idx.size(); ++step) {
    auto min_to_picked = [&](const LevelVector& p) {
      int d = 1 << 30;
      for (std::size_t j = 0; j < step; ++j) d = std::min(d, l1_distance(p, grid[idx[j]]));
      return d;
    };
    const int chosen = min_to_picked(grid[idx[step]]);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::find(idx.begin(), idx.begin() + static_cast<long>(step), i) !=
          idx.begin() + static_cast<long>(step))
        continue;
      EXPECT_GE(chosen, min_to_picked(grid[i]));
    }
  }
}

TEST(Fps, DeterministicAcrossRuns) {
  const auto grid = enumerate_grid();
  const auto first = farthest_point_indices(grid, 9, 0);
  for (int run = 0; run < 10; ++run) EXPECT_EQ(farthest_point_indices(grid, 9, 0), first);
}

TEST(Fps, PermutationDoesNotChangeSelectedSet) {
  const auto grid = enumerate_grid();
  const auto expected = farthest_point_sample(grid, 9, 0);
  const std::set<LevelVector> expected_set(expected.begin(), expected.end());
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto shuffled = grid;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto seed = static_cast<std::size_t>(
        std::find(shuffled.begin(), shuffled.end(), grid[0]) - shuffled.begin());
    const auto got = farthest_point_sample(shuffled, 9, seed);
    EXPECT_EQ(std::set<LevelVector>(got.begin(), got.end()), expected_set);
  }
}

TEST(Fps, RejectsBadArguments) {
  const auto grid = enumerate_grid();
  try {
    (void)farthest_point_indices(grid, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::k_out_of_range);
  }
  try {
    (void)farthest_point_indices(grid, 244);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::k_out_of_range);
  }
  try {
    (void)farthest_point_indices(grid, 3, 243);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_range);
  }
  EXPECT_EQ(farthest_point_indices(grid, 243).size(), 243u);
}

TEST(Fps, FullGridUnderOneSecond) {
  const auto start = std::chrono::steady_clock::now();
  (void)farthest_point_indices(enumerate_grid(), 9, 0);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(1));
}

TEST(Materialize, LevelsMapToKnowledgeAndRatings) {
  const auto comps = default_curriculum().components;
  const auto high = materialize({2, 2, 2, 2, 2}, comps);
  EXPECT_EQ(high.initial_knowledge.count(), 6u);
  EXPECT_EQ(trait_sums(high.ratings), (std::array<int, 4>{15, 15, 15, 15}));
  const auto low = materialize({0, 0, 0, 0, 0}, comps, Pipeline::baseline);
  EXPECT_EQ(low.initial_knowledge.count(), 0u);
  EXPECT_EQ(trait_sums(low.ratings), (std::array<int, 4>{3, 3, 3, 3}));
  EXPECT_EQ(low.id, "K0-GC0-MO0-SE0-ST0-baseline");
  const auto mid = materialize({1, 0, 1, 2, 0}, comps);
  EXPECT_EQ(mid.initial_knowledge, KnowledgeState::first_n(6, 3));
  EXPECT_EQ(trait_sums(mid.ratings), (std::array<int, 4>{3, 9, 15, 3}));
  EXPECT_TRUE(mid.overview.text.empty());
  EXPECT_THROW((void)materialize({3, 0, 0, 0, 0}, comps), Error);
}

TEST(Sample, DocumentIsStable) {
  SampleRequest req;
  req.pipelines = {Pipeline::ours, Pipeline::baseline};
  const auto a = sample_profiles(req, default_curriculum().components);
  const auto b = sample_profiles(req, default_curriculum().components);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.at("profiles").size(), 18u);
  EXPECT_EQ(a.at("grid_size"), 243);
}
