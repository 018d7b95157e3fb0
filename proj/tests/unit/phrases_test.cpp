#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "potforge/error.hpp"
#include "potforge/phrases.hpp"

using namespace potforge;

TEST(PhraseViolation, AcceptsOrdinaryText) {
  EXPECT_FALSE(phrase_violation("Please thoroughly examine all prior conditions", 400).has_value());
}

TEST(PhraseViolation, RejectsBadShapes) {
  EXPECT_TRUE(phrase_violation("", 400).has_value());
  EXPECT_TRUE(phrase_violation(" leading", 400).has_value());
  EXPECT_TRUE(phrase_violation("trailing ", 400).has_value());
  EXPECT_TRUE(phrase_violation("two\nlines", 400).has_value());
  EXPECT_TRUE(phrase_violation(std::string(401, 'a'), 400).has_value());
}

TEST(PhraseViolation, LengthCountsCodePoints) {
  std::string s;
  for (int i = 0; i < 400; ++i) s += "é";
  EXPECT_EQ(utf8_length(s), 400u);
  EXPECT_FALSE(phrase_violation(s, 400).has_value());
}

TEST(SplitPhraseList, NumberedItemsWithContinuations) {
  const auto items = split_phrase_list(
      "Here are some phrases:\n1. First phrase\n   continues here\n2) \"Second phrase\"\n\n- **Third**\n");
  EXPECT_EQ(items, (std::vector<std::string>{"First phrase continues here", "Second phrase", "Third"}));
}

TEST(SplitPhraseList, PlainLinesWithoutMarkers) {
  EXPECT_EQ(split_phrase_list("alpha\n\nbeta\n"), (std::vector<std::string>{"alpha", "beta"}));
}

TEST(SplitPhraseList, EmptyResponse) { EXPECT_TRUE(split_phrase_list("  \n").empty()); }

TEST(FoldCase, CollapsesCaseAndSpacing) {
  EXPECT_EQ(fold_case("  Step  BY step "), "step by step");
}

TEST(GuidingPhraseJson, RoundTrips) {
  const GuidingPhrase p{"r03-c02", "Consider each case.", PhraseOrigin::kOptimizerRound, 3};
  nlohmann::json j = p;
  EXPECT_EQ(j.at("origin"), "optimizer_round");
  EXPECT_EQ(j.get<GuidingPhrase>(), p);
}

TEST(QuestionJson, RoundTripsWithAndWithoutAnswer) {
  Question q{"q1", "What is 2+2?", canonicalize_answer("4"), "arith"};
  nlohmann::json j = q;
  EXPECT_EQ(j.get<Question>(), q);
  q.ground_truth.reset();
  j = q;
  EXPECT_TRUE(j.at("answer").is_null());
  EXPECT_EQ(j.get<Question>(), q);
}

TEST(PhraseOrigin, UnknownStringThrows) { EXPECT_THROW(phrase_origin_from_string("mutant"), Error); }
