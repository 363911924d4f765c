// Prompt text is compared byte-for-byte against tests/golden. Run with
// UPDATE_GOLDEN=1 to rewrite the files after an intended change.
#include <gtest/gtest.h>

#include "golden_prompts.hpp"
#include "test_support.hpp"

using namespace tutorsim::testing;

TEST(Golden, EveryPromptTemplateMatches) {
  const auto prompts = golden_prompts();
  EXPECT_EQ(prompts.size(), 11u);
  for (const auto& [name, text] : prompts) {
    const auto mismatch = golden_mismatch(name, text);
    EXPECT_FALSE(mismatch.has_value()) << *mismatch;
  }
}
