#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tutorsim/curriculum.hpp"
#include "tutorsim/pca_engine.hpp"
#include "tutorsim/scripted_provider.hpp"

using namespace tutorsim;
using namespace tutorsim::testing;
using nlohmann::json;

namespace {

Conversation opened(const std::string& student_text) {
  Conversation c;
  c.append(pca_message(starter_diagram().root().start_message, "root"));
  c.append(student_message(student_text, KnowledgeState(6)));
  return c;
}

std::shared_ptr<RecordingProvider> master_replying(const std::string& reply) {
  return std::make_shared<RecordingProvider>(ScriptedProvider::from_json(
      json::array({{{"match", {{"tag", "master"}}}, {"response", reply}}})));
}

}  // namespace

TEST(Master, ParsesFirstInteger) {
  EXPECT_EQ(parse_master_answer("2"), 2u);
  EXPECT_EQ(parse_master_answer("Answer: 3."), 3u);
  EXPECT_EQ(parse_master_answer(" 12 or 1"), 12u);
  EXPECT_FALSE(parse_master_answer("none").has_value());
  EXPECT_FALSE(parse_master_answer("").has_value());
}

TEST(Master, PromptListsOptionsAndNoneOfTheAbove) {
  const auto c = opened("I know solids.");
  const std::vector<std::string> options{"A", "B"};
  const auto p = assemble_master_prompt(tail(c, 6), options);
  EXPECT_NE(p.find("Chatbot: Are you ready"), std::string::npos);
  EXPECT_NE(p.find("Student: I know solids."), std::string::npos);
  EXPECT_NE(p.find("1. A\n2. B\n3. None of the above\n"), std::string::npos);
  EXPECT_TRUE(p.ends_with("Answer (write in numbers):"));
  EXPECT_THROW((void)assemble_master_prompt(tail(c, 6), std::vector<std::string>{}), Error);
}

TEST(Transition, ReplyPicksChildInOptionOrder) {
  const auto d = starter_diagram();
  const auto c = opened("Hmm.");
  for (const auto& [reply, expected] :
       std::vector<std::pair<std::string, std::string>>{{"1", "explains_well"},
                                                        {"2", "explains_poorly"},
                                                        {"3", "root"},
                                                        {"7", "root"},
                                                        {"0", "root"},
                                                        {"no idea", "root"}}) {
    auto state = start_engine(d);
    auto gw = gateway_for(master_replying(reply));
    EXPECT_EQ(transition(state, d, c, *gw), expected) << reply;
    ASSERT_EQ(state.transition_log.size(), 1u);
    const auto& e = state.transition_log[0];
    EXPECT_EQ(e.raw_answer, reply);
    EXPECT_EQ(e.stayed, expected == "root");
    EXPECT_EQ(e.options_presented, (std::vector<std::string>{"explains_well", "explains_poorly"}));
    EXPECT_EQ(e.message_index, 1u);
    EXPECT_EQ(e.turn, 1u);
  }
}

TEST(Transition, UnparseableAndOutOfRangeAreFlagged) {
  const auto d = starter_diagram();
  const auto c = opened("Hmm.");
  auto state = start_engine(d);
  auto gw = gateway_for(master_replying("banana"));
  transition(state, d, c, *gw);
  EXPECT_NE(state.transition_log[0].note.find("unparseable"), std::string::npos);
  auto state2 = start_engine(d);
  auto gw2 = gateway_for(master_replying("9"));
  transition(state2, d, c, *gw2);
  EXPECT_NE(state2.transition_log[0].note.find("out of range"), std::string::npos);
}

TEST(Transition, LeafNodeNeverCallsGateway) {
  const auto d = starter_diagram();
  const auto c = opened("Thanks!");
  auto state = start_engine(d, "finish");
  auto recording = master_replying("1");
  auto gw = gateway_for(recording);
  EXPECT_EQ(transition(state, d, c, *gw), "finish");
  EXPECT_EQ(recording->requests().size(), 0u);
  EXPECT_EQ(state.transition_log[0].note, "leaf node");
  EXPECT_FALSE(state.transition_log[0].raw_answer.has_value());
}

TEST(Transition, RequiresTrailingStudentMessage) {
  const auto d = starter_diagram();
  Conversation c;
  c.append(pca_message("hi", "root"));
  auto state = start_engine(d);
  auto gw = gateway_for(master_replying("1"));
  EXPECT_THROW(transition(state, d, c, *gw), Error);
}

TEST(Transition, MasterRunsAtTemperatureZero) {
  const auto d = starter_diagram();
  auto recording = master_replying("2");
  auto gw = gateway_for(recording);
  auto state = start_engine(d);
  transition(state, d, opened("x"), *gw);
  ASSERT_EQ(recording->requests().size(), 1u);
  EXPECT_EQ(recording->requests()[0].temperature, 0.0);
  EXPECT_FALSE(recording->requests()[0].system.has_value());
}

TEST(PcaRespond, FirstMessageIsRootStartVerbatimWithoutCall) {
  const auto d = starter_diagram();
  auto recording = master_replying("1");
  auto gw = gateway_for(recording);
  const auto m = pca_respond(start_engine(d), d, Conversation{}, default_curriculum(), *gw);
  EXPECT_EQ(m.text, d.root().start_message);
  EXPECT_EQ(m.active_node_id, "root");
  EXPECT_TRUE(recording->requests().empty());
}

TEST(PcaRespond, UsesActiveNodeInstruction) {
  const auto d = starter_diagram();
  auto recording = std::make_shared<RecordingProvider>(ScriptedProvider::from_json(
      json::array({{{"match", {{"tag", "pca"}}}, {"response", "Here is how."}}})));
  auto gw = gateway_for(recording);
  auto state = start_engine(d, "explains_poorly");
  const auto m = pca_respond(state, d, opened("??"), default_curriculum(), *gw);
  EXPECT_EQ(m.text, "Here is how.");
  EXPECT_EQ(m.active_node_id, "explains_poorly");
  const auto r = recording->requests().at(0);
  EXPECT_NE(r.system->find("<instruction>\nExplain the state changes step by step.\n</instruction>"),
            std::string::npos);
  ASSERT_EQ(r.messages.size(), 2u);
  EXPECT_EQ(r.messages[0].role, ChatRole::assistant);
  EXPECT_EQ(r.messages[1].role, ChatRole::user);
}

TEST(PcaPrompt, ListsEveryComponent) {
  const auto c = default_curriculum();
  const auto p = assemble_pca_system_prompt(starter_diagram().node("finish"), c);
  for (const auto& k : c.components) EXPECT_NE(p.find("- " + k.text + "\n"), std::string::npos);
  DiagramNode bare{"n", "b", "", ""};
  EXPECT_THROW((void)assemble_pca_system_prompt(bare, c), Error);
}

TEST(EngineState, JsonRoundTrip) {
  const auto d = starter_diagram();
  auto state = start_engine(d);
  auto gw = gateway_for(master_replying("2"));
  transition(state, d, opened("x"), *gw);
  const json j = state;
  EXPECT_EQ(j.get<EngineState>(), state);
}
