#pragma once

#include <array>
#include <string>
#include <string_view>

#include "tutorsim/domain.hpp"

namespace tutorsim {

// Subject framing substituted into every prompt template. The defaults
// describe the middle-school phase-transition unit the workbench ships with.
struct Curriculum {
  std::string level = "middle school";
  std::string discipline = "science";
  std::string subject = "the change of state of matter";
  std::string topic = "phase transitions between solid, liquid, and gas";
  ComponentList components;

  friend bool operator==(const Curriculum&, const Curriculum&) = default;
};

// Six phase-transition components (solid, liquid, gas, phase change,
// invariant properties, conservation of mass).
Curriculum default_curriculum();

// Fixed inventory statements: three per trait, in display order.
const std::array<std::string_view, kItemsPerTrait>& inventory_items(Trait trait);

// 1 -> "Strongly disagree" ... 5 -> "Strongly agree".
std::string_view likert_label(int rating);

// Root, two children (explains well / does not), and a shared final node.
StateDiagram starter_diagram();

}  // namespace tutorsim
