#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tutorsim::testing {

// (golden file name, freshly assembled prompt) for every prompt template.
std::vector<std::pair<std::string, std::string>> golden_prompts();

}  // namespace tutorsim::testing
