#include "golden_prompts.hpp"

#include "tutorsim/curriculum.hpp"
#include "tutorsim/pca_engine.hpp"
#include "tutorsim/profile_sampler.hpp"
#include "tutorsim/sim_student.hpp"

namespace tutorsim::testing {

namespace {

const char* const kOverview =
    "This student sets clear goals for science and works steadily toward them. Motivation is "
    "moderate. Self-efficacy is low, and stress rises quickly when questions get hard.";

StudentProfile profile(Pipeline pipeline) {
  auto p = materialize({2, 1, 0, 1, 2}, default_curriculum().components, pipeline);
  p.id = "G1";
  p.name = "G1";
  if (pipeline == Pipeline::ours) p.overview.text = kOverview;
  return p;
}

Conversation sample_conversation() {
  Conversation c;
  c.append(pca_message("Are you ready to review the concepts you learned last time?", "root"));
  c.append(student_message("I think so, but I forgot most of it.", KnowledgeState(6)));
  c.append(pca_message("No problem. A solid has a fixed shape and a fixed volume.", "explains_well"));
  c.append(student_message("Oh, so ice keeps its shape?", KnowledgeState::first_n(6, 1)));
  return c;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> golden_prompts() {
  const auto c = default_curriculum();
  const auto conv = sample_conversation();
  const auto state = KnowledgeState::first_n(6, 2);
  const std::vector<std::string> options{"The student explains the concept well.",
                                         "The student explains the concept poorly."};
  std::vector<std::pair<std::string, std::string>> out{
      {"interpret.txt", assemble_interpret_prompt(profile(Pipeline::ours).ratings, c)},
      {"reflect.txt", assemble_reflect_prompt(KnowledgeState::first_n(6, 1), tail(conv, 2), c)},
      {"respond_ours.txt", assemble_respond_system_prompt(profile(Pipeline::ours), state, c)},
      {"respond_baseline.txt", assemble_respond_system_prompt(profile(Pipeline::baseline), state, c)},
      {"respond_knowledge_only.txt",
       assemble_respond_system_prompt(profile(Pipeline::knowledge_only), state, c)},
      {"respond_ours_evaluation.txt",
       assemble_respond_system_prompt(profile(Pipeline::ours), state, c, evaluation_settings())},
      {"master.txt", assemble_master_prompt(tail(conv, 6), options)},
  };
  for (const auto& node : starter_diagram().nodes)
    out.emplace_back("pca_" + node.id + ".txt", assemble_pca_system_prompt(node, c));
  return out;
}

}  // namespace tutorsim::testing
