#include "tutorsim/curriculum.hpp"

#include "tutorsim/error.hpp"

namespace tutorsim {

Curriculum default_curriculum() {
  Curriculum c;
  c.components = make_components({
      "Solids have a regular particle arrangement, are rigid, have a constant shape and volume, "
      "and do not flow.",
      "Liquids have a less regular particle arrangement than solids, change shape but have a "
      "constant volume, and flow.",
      "Gases have a highly irregular particle arrangement, have neither a constant shape nor "
      "volume, flow, and spread out to fill a space.",
      "Substances exist in only one of the three states of matter—solid, liquid, or "
      "gas—but can change to a different state depending on temperature or pressure; the "
      "change in a substance’s state is called a phase change.",
      "During a phase change, the properties of a substance do not change because the particles "
      "that make up the substance do not change.",
      "Even when a substance changes state, the particles that make up the substance and the "
      "number of particles do not change, so the mass does not change.",
  });
  return c;
}

const std::array<std::string_view, kItemsPerTrait>& inventory_items(Trait trait) {
  static const std::array<std::array<std::string_view, kItemsPerTrait>, 4> kItems = {{
      {"I am strongly committed to pursuing this goal.",
       "I think this is a good goal to shoot for.",
       "I am willing to put forth a great deal of effort beyond what I'd normally do to achieve "
       "this goal."},
      {"I keep working on a problem until I understand it.",
       "I try to learn more about something that I don't understand right away so that I will "
       "understand it.",
       "When I know I have learned something new, I feel good inside."},
      {"I believe I am the kind of person who is good at science.",
       "I believe I am the type of person who can do science.",
       "I believe I can learn well in a science course."},
      {"I feel a lot of pressure in my daily studying.",
       "Future education and employment bring me a lot of academic pressure.",
       "I feel that I have disappointed my parents when my test/exam results are poor."},
  }};
  return kItems[static_cast<std::size_t>(trait)];
}

std::string_view likert_label(int rating) {
  switch (rating) {
    case 1: return "Strongly disagree";
    case 2: return "Disagree";
    case 3: return "Neutral";
    case 4: return "Agree";
    case 5: return "Strongly agree";
    default:
      throw Error(ErrorCode::out_of_range, "Likert rating " + std::to_string(rating) +
                                               " outside [1,5]");
  }
}

StateDiagram starter_diagram() {
  StateDiagram d;
  d.root_id = "root";
  d.nodes = {
      {"root", "",
       "Ask the student what they know about the state changes between solid, liquid, and gas.",
       "Are you ready to review the concepts you learned last time?"},
      {"explains_well", "The student explains the state changes well.",
       "Praise the student and ask them to explain with a real-life example.", ""},
      {"explains_poorly", "The student does not explain the state changes well.",
       "Explain the state changes step by step.", ""},
      {"finish", "The student understands the state changes well.",
       "Praise the student and finish the lesson.", ""},
  };
  d.edges = {
      {"root", "explains_well"},
      {"root", "explains_poorly"},
      {"explains_well", "finish"},
      {"explains_poorly", "finish"},
  };
  return d;
}

}  // namespace tutorsim
