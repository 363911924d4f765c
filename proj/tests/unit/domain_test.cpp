#include <gtest/gtest.h>

#include "tutorsim/curriculum.hpp"
#include "tutorsim/domain.hpp"
#include "tutorsim/error.hpp"
#include "tutorsim/json_codec.hpp"

using namespace tutorsim;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected tutorsim::Error";
  return ErrorCode::io_error;
}

}  // namespace

TEST(KnowledgeState, AcquireIsIdempotentAndBounded) {
  KnowledgeState s(6);
  s.acquire(2);
  s.acquire(2);
  EXPECT_EQ(s.count(), 1u);
  EXPECT_EQ(s.acquired_indices(), std::vector<std::size_t>{2});
  EXPECT_EQ(s.missing_indices().size(), 5u);
  EXPECT_EQ(code_of([&] { s.acquire(6); }), ErrorCode::out_of_range);
  EXPECT_EQ(code_of([&] { (void)s.acquired(9); }), ErrorCode::out_of_range);
}

TEST(KnowledgeState, SizedRejectsMismatch) {
  EXPECT_EQ(code_of([] { KnowledgeState::sized({true, false}, 6); }), ErrorCode::length_mismatch);
  EXPECT_EQ(KnowledgeState::first_n(6, 3).bits(),
            (std::vector<bool>{true, true, true, false, false, false}));
  EXPECT_TRUE(KnowledgeState::all(4).includes(KnowledgeState::first_n(4, 2)));
  EXPECT_FALSE(KnowledgeState::first_n(4, 2).includes(KnowledgeState::all(4)));
}

TEST(TraitRatings, SumsAndBounds) {
  auto r = TraitRatings::uniform(3);
  EXPECT_EQ(trait_sums(r), (std::array<int, 4>{9, 9, 9, 9}));
  r.set_items(Trait::stress, {5, 5, 4});
  EXPECT_EQ(trait_sum(r, Trait::stress), 14);
  EXPECT_EQ(code_of([&] { r.set_item(Trait::motivation, 0, 6); }), ErrorCode::validation_failed);
  EXPECT_EQ(code_of([&] { r.set_item(Trait::motivation, 3, 2); }), ErrorCode::out_of_range);
  EXPECT_EQ(trait_sums(TraitRatings::uniform(1)), (std::array<int, 4>{3, 3, 3, 3}));
  EXPECT_EQ(trait_sums(TraitRatings::uniform(5)), (std::array<int, 4>{15, 15, 15, 15}));
}

TEST(Traits, NamesRoundTrip) {
  for (Trait t : kTraits) {
    EXPECT_EQ(trait_from_key(trait_key(t)), t);
    EXPECT_EQ(trait_from_key(trait_abbrev(t)), t);
  }
  EXPECT_FALSE(trait_from_key("grit").has_value());
}

TEST(Diagram, StarterDiagramIsValid) {
  const auto d = starter_diagram();
  const auto report = validate_diagram(d);
  EXPECT_TRUE(report.ok()) << (report.errors.empty() ? "" : report.errors.front());
  EXPECT_EQ(d.children("root"), (std::vector<std::string>{"explains_well", "explains_poorly"}));
  EXPECT_TRUE(d.children("finish").empty());
}

TEST(Diagram, StructuralErrorsAreReported) {
  auto d = starter_diagram();
  d.edges.push_back({"finish", "finish"});
  EXPECT_FALSE(validate_diagram(d).ok());

  d = starter_diagram();
  d.nodes[1].behavior = "  ";
  EXPECT_FALSE(validate_diagram(d).ok());

  d = starter_diagram();
  d.edges.push_back({"root", "ghost"});
  EXPECT_FALSE(validate_diagram(d).ok());

  d = starter_diagram();
  d.nodes.push_back({"root2", "", "Ask.", "Hi"});
  EXPECT_FALSE(validate_diagram(d).ok());

  d = starter_diagram();
  d.edges.push_back({"root", "explains_well"});
  EXPECT_FALSE(validate_diagram(d).ok());
}

TEST(Diagram, UnreachableNodeIsOnlyAWarning) {
  auto d = starter_diagram();
  d.nodes.push_back({"island", "The student is silent.", "Wait.", ""});
  const auto report = validate_diagram(d);
  EXPECT_TRUE(report.ok());
  EXPECT_FALSE(report.warnings.empty());
}

TEST(Conversation, AppendEnforcesAlternationAndAnnotations) {
  Conversation c;
  EXPECT_EQ(code_of([&] { c.append(student_message("hi", KnowledgeState(6))); }),
            ErrorCode::validation_failed);
  c.append(pca_message("Hello", "root"));
  EXPECT_EQ(code_of([&] { c.append(pca_message("Again", "root")); }), ErrorCode::validation_failed);
  Message bare;
  bare.role = Role::student;
  bare.text = "no snapshot";
  EXPECT_EQ(code_of([&] { c.append(bare); }), ErrorCode::validation_failed);
  c.append(student_message("hi", KnowledgeState(6)));
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(tail(c, 1).size(), 1u);
  EXPECT_EQ(tail(c, 10).size(), 2u);
}

TEST(Conversation, StalenessFollowsDiagramVersion) {
  Conversation c;
  c.diagram_version = 3;
  EXPECT_FALSE(c.refresh_stale(3));
  EXPECT_TRUE(c.refresh_stale(4));
  EXPECT_TRUE(c.stale);
}

TEST(Codec, ProfileRoundTrip) {
  StudentProfile p;
  p.id = "p1";
  p.name = "Pat";
  p.initial_knowledge = KnowledgeState::first_n(6, 2);
  p.ratings = TraitRatings::uniform(4);
  p.overview.text = "overview";
  p.overview.generated_from = p.ratings;
  p.pipeline = Pipeline::baseline;
  const json j = p;
  EXPECT_EQ(j.get<StudentProfile>(), p);
}

TEST(Codec, UnsupportedSchemaVersion) {
  json j = EvalRecord{"p", "r", KnowledgeState(6), {3, 3, 3, 3}, {3, 3, 3}};
  j["schema"] = 99;
  EXPECT_EQ(code_of([&] { (void)j.get<EvalRecord>(); }), ErrorCode::schema_error);
}

TEST(Codec, RecordValidation) {
  json j = EvalRecord{"p", "r", KnowledgeState(6), {3, 3, 3, 3}, {3, 3, 3}};
  j["believability"] = {0, 3, 3};
  EXPECT_THROW((void)j.get<EvalRecord>(), Error);
}

TEST(Curriculum, DefaultHasSixComponents) {
  const auto c = default_curriculum();
  ASSERT_EQ(c.components.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(c.components[i].index, i);
  EXPECT_EQ(inventory_items(Trait::stress).size(), 3u);
  EXPECT_EQ(likert_label(1), "Strongly disagree");
  EXPECT_EQ(likert_label(5), "Strongly agree");
}

TEST(Errors, ApiAndExitMapping) {
  EXPECT_EQ(api_code(ErrorCode::script_miss), "provider_error");
  EXPECT_EQ(api_code(ErrorCode::k_out_of_range), "validation_failed");
  EXPECT_EQ(http_status(ErrorCode::stale_conversation), 409);
  EXPECT_EQ(http_status(ErrorCode::session_busy), 409);
  EXPECT_EQ(http_status(ErrorCode::not_found), 404);
  EXPECT_EQ(exit_code(ErrorCode::config_error), 2);
  EXPECT_EQ(exit_code(ErrorCode::transport_error), 3);
  EXPECT_EQ(exit_code(ErrorCode::validation_failed), 4);
  EXPECT_EQ(error_code_from_string("session_busy"), ErrorCode::session_busy);
}
