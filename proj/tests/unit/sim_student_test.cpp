#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tutorsim/autochat.hpp"
#include "tutorsim/curriculum.hpp"
#include "tutorsim/profile_sampler.hpp"
#include "tutorsim/scripted_provider.hpp"
#include "tutorsim/sim_student.hpp"

using namespace tutorsim;
using namespace tutorsim::testing;
using nlohmann::json;

namespace {

StudentProfile profile_with(Pipeline pipeline) {
  auto p = materialize({1, 2, 0, 1, 2}, default_curriculum().components, pipeline);
  if (pipeline == Pipeline::ours) p.overview.text = "Goal commitment is high; stress is high.";
  return p;
}

Conversation after_pca(const std::string& pca_text) {
  Conversation c;
  c.append(pca_message("Are you ready?", "root"));
  c.append(student_message("Yes.", KnowledgeState(6)));
  c.append(pca_message(pca_text, "explains_poorly"));
  return c;
}

}  // namespace

TEST(ReflectParse, IndicesNullOutOfRangeAndGarbage) {
  auto r = parse_reflect_output("Components 0 and 3 were explained.\n0, 3", 6);
  EXPECT_TRUE(r.parsed);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 3}));

  r = parse_reflect_output("Nothing.\nnull", 6);
  EXPECT_TRUE(r.is_null);
  EXPECT_TRUE(r.indices.empty());

  r = parse_reflect_output("NULL.", 6);
  EXPECT_TRUE(r.is_null);

  r = parse_reflect_output("0, 7, 2, 2", 6);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(r.warnings.size(), 1u);

  r = parse_reflect_output("I am not sure what the student learned.", 6);
  EXPECT_FALSE(r.parsed);
  EXPECT_TRUE(r.indices.empty());
  EXPECT_FALSE(r.warnings.empty());

  r = parse_reflect_output("**1, 4**\n\n", 6);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{1, 4}));

  r = parse_reflect_output("", 6);
  EXPECT_FALSE(r.parsed);

  r = parse_reflect_output("99999999999999", 6);
  EXPECT_TRUE(r.indices.empty());
}

TEST(Reflect, UnionOnlyAndSkipsWhenComplete) {
  const auto c = default_curriculum();
  auto gw = scripted_gateway(json::array({{{"match", {{"tag", "reflect"}}}, {"response", "x\n1, 2"}}}));
  const auto conv = after_pca("Liquids flow.");
  const auto r = reflect(KnowledgeState::first_n(6, 2), tail(conv, 2), c, *gw);
  EXPECT_EQ(r.state.acquired_indices(), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(r.newly_acquired, std::vector<std::size_t>{2});
  EXPECT_TRUE(r.state.includes(KnowledgeState::first_n(6, 2)));

  const auto before = gw->trace().size();
  const auto full = reflect(KnowledgeState::all(6), tail(conv, 2), c, *gw);
  EXPECT_EQ(gw->trace().size(), before);
  EXPECT_EQ(full.state, KnowledgeState::all(6));
}

TEST(Reflect, PromptListsOnlyMissingComponentsWithOriginalIndices) {
  const auto c = default_curriculum();
  auto s = KnowledgeState(6);
  s.acquire(0);
  s.acquire(2);
  const auto conv = after_pca("Gases spread.");
  const auto p = assemble_reflect_prompt(s, tail(conv, 2), c);
  EXPECT_EQ(p.find("0. " + c.components[0].text), std::string::npos);
  EXPECT_NE(p.find("1. " + c.components[1].text), std::string::npos);
  EXPECT_NE(p.find("3. " + c.components[3].text), std::string::npos);
  EXPECT_NE(p.find("Teacher: Gases spread.\n"), std::string::npos);
  EXPECT_EQ(p.find("Are you ready?"), std::string::npos);  // outside the window
}

TEST(Respond, PipelinesDifferOnlyInBehaviorBlock) {
  const auto c = default_curriculum();
  const auto state = KnowledgeState::first_n(6, 3);
  std::map<Pipeline, std::string> stripped;
  for (Pipeline p : {Pipeline::ours, Pipeline::baseline, Pipeline::knowledge_only}) {
    const auto profile = profile_with(p);
    auto prompt = assemble_respond_system_prompt(profile, state, c);
    const auto block = render_behavior_block(profile, c);
    if (p == Pipeline::knowledge_only) {
      EXPECT_TRUE(block.empty());
    } else {
      const auto at = prompt.find(block);
      ASSERT_NE(at, std::string::npos);
      prompt.erase(at, block.size());
    }
    stripped[p] = prompt;
  }
  EXPECT_EQ(stripped[Pipeline::ours], stripped[Pipeline::baseline]);
  EXPECT_EQ(stripped[Pipeline::ours], stripped[Pipeline::knowledge_only]);
}

TEST(Respond, OursWithoutOverviewIsRejected) {
  auto p = profile_with(Pipeline::ours);
  p.overview.text = "  ";
  EXPECT_THROW((void)render_behavior_block(p, default_curriculum()), Error);
  EXPECT_FALSE(ready_for_simulation(p));
}

TEST(Respond, KnowledgeBlockListsAcquiredOnly) {
  const auto c = default_curriculum();
  auto s = KnowledgeState(6);
  s.acquire(4);
  const auto p = assemble_respond_system_prompt(profile_with(Pipeline::knowledge_only), s, c);
  EXPECT_NE(p.find("<knowledge>\n- " + c.components[4].text + "\n</knowledge>"), std::string::npos);
  EXPECT_EQ(p.find(c.components[0].text), std::string::npos);
  EXPECT_THROW((void)assemble_respond_system_prompt(profile_with(Pipeline::baseline),
                                                    KnowledgeState(5), c),
               Error);
}

TEST(Respond, AntiRepetitionIsToggleable) {
  const auto c = default_curriculum();
  StudentSettings on, off;
  off.anti_repetition = false;
  const auto p = profile_with(Pipeline::baseline);
  const auto a = assemble_respond_system_prompt(p, KnowledgeState(6), c, on);
  const auto b = assemble_respond_system_prompt(p, KnowledgeState(6), c, off);
  EXPECT_NE(a.find(kAntiRepetitionInstruction), std::string::npos);
  EXPECT_EQ(b.find(kAntiRepetitionInstruction), std::string::npos);
  EXPECT_EQ(a, b + "\n" + std::string(kAntiRepetitionInstruction));
}

TEST(Respond, StudentViewSwapsRoles) {
  const auto conv = after_pca("Look.");
  const auto v = student_view(conv);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].role, ChatRole::user);
  EXPECT_EQ(v[1].role, ChatRole::assistant);
}

TEST(StudentTurn, SnapshotIsPostReflectState) {
  const auto c = default_curriculum();
  auto gw = scripted_gateway(json::array({{{"match", {{"tag", "reflect"}}}, {"response", "5"}},
                                          {{"match", {{"tag", "respond"}}}, {"response", "ok"}}}));
  const auto profile = profile_with(Pipeline::baseline);
  const auto turn = student_turn(profile, after_pca("Mass is conserved."), c, *gw);
  EXPECT_EQ(turn.message.text, "ok");
  EXPECT_TRUE(turn.state.acquired(5));
  EXPECT_EQ(*turn.message.knowledge_snapshot, turn.state);
  // The Respond prompt already lists the newly acquired component.
  const auto respond_req = gw->trace().with_tag("respond").at(0).request;
  EXPECT_NE(respond_req.system->find(c.components[5].text), std::string::npos);
}

TEST(StudentTurn, ReflectCanBeDisabled) {
  auto gw = scripted_gateway(json::array({{{"match", {{"tag", "respond"}}}, {"response", "ok"}}}));
  StudentSettings s;
  s.reflect_enabled = false;
  const auto profile = profile_with(Pipeline::knowledge_only);
  const auto conv = after_pca("x");
  const auto turn = student_turn(profile, conv, default_curriculum(), *gw, s);
  EXPECT_EQ(turn.state, current_knowledge(profile, conv));
  EXPECT_TRUE(gw->trace().with_tag("reflect").empty());
}

TEST(Interpret, PromptAndOverviewProvenance) {
  const auto c = default_curriculum();
  auto ratings = TraitRatings::uniform(2);
  const auto prompt = assemble_interpret_prompt(ratings, c);
  EXPECT_NE(prompt.find("<student's-goal-commitment>"), std::string::npos);
  EXPECT_NE(prompt.find("</student's-stress>"), std::string::npos);
  EXPECT_NE(prompt.find(": 2 (Disagree)"), std::string::npos);

  auto gw = scripted_gateway(json::array({{{"match", {{"tag", "interpret"}}}, {"response", "Goal, motivation, self-efficacy, stress."}}}));
  auto profile = profile_with(Pipeline::ours);
  profile.overview = {};
  EXPECT_TRUE(ensure_overview(profile, c, *gw));
  EXPECT_EQ(profile.overview.generated_from, profile.ratings);
  EXPECT_FALSE(ensure_overview(profile, c, *gw));
  profile.ratings.set_item(Trait::stress, 0, 1);
  EXPECT_TRUE(ensure_overview(profile, c, *gw));  // ratings drifted
  profile.overview.edited = true;
  profile.ratings.set_item(Trait::stress, 0, 5);
  EXPECT_FALSE(ensure_overview(profile, c, *gw));  // teacher edits are kept
  EXPECT_TRUE(ensure_overview(profile, c, *gw, true));
  EXPECT_TRUE(missing_trait_sections(profile.overview.text).empty());
  EXPECT_EQ(missing_trait_sections("Only stress here.").size(), 3u);
}

// Snapshots never lose a component, whatever the Reflect step returns.
TEST(Property, KnowledgeIsMonotoneOver50Conversations) {
  const auto curriculum = default_curriculum();
  const auto diagram = starter_diagram();
  const auto grid = enumerate_grid();
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    auto gw = gateway_for(std::make_shared<SeededProvider>(seed));
    auto profile = materialize(grid[(seed * 37) % grid.size()], curriculum.components,
                               static_cast<Pipeline>(seed % 3));
    ensure_overview(profile, curriculum, *gw);
    ReviewContext ctx{diagram, 1, curriculum};
    auto session = create_session("s", ReviewMode::automated, ctx, profile.id);
    generate_batch(session, profile, ctx, {*gw, *gw});
    generate_batch(session, profile, ctx, {*gw, *gw});
    ASSERT_EQ(session.conversation.size(), 12u);
    KnowledgeState prev = profile.initial_knowledge;
    for (const auto& m : session.conversation.messages) {
      if (m.role != Role::student) continue;
      ASSERT_TRUE(m.knowledge_snapshot);
      EXPECT_TRUE(m.knowledge_snapshot->includes(prev)) << "seed " << seed;
      prev = *m.knowledge_snapshot;
    }
  }
}
