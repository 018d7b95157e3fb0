#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "potforge/answer.hpp"
#include "potforge/error.hpp"

using namespace potforge;

namespace {

AnswerHint hint_from(const std::string& s) {
  if (s == "numeric") return AnswerHint::kNumeric;
  if (s == "choice") return AnswerHint::kChoice;
  if (s == "text") return AnswerHint::kText;
  return AnswerHint::kAny;
}

CanonicalAnswer ans(const std::string& canonical, AnswerKind kind) { return {canonical, canonical, kind}; }

}  // namespace

TEST(ExtractAnswer, ReducesFractions) {
  const auto a = extract_answer("… so the answer is 3/6.");
  EXPECT_EQ(a.kind, AnswerKind::kRational);
  EXPECT_EQ(a.canonical, "1/2");
}

TEST(ExtractAnswer, StripsCurrencyAndSeparators) {
  const auto a = extract_answer("The result is $1,200.");
  EXPECT_EQ(a.kind, AnswerKind::kInteger);
  EXPECT_EQ(a.canonical, "1200");
}

TEST(ExtractAnswer, ChoiceWithHint) {
  const auto a = extract_answer("(b) is correct", AnswerHint::kChoice);
  EXPECT_EQ(a.kind, AnswerKind::kChoice);
  EXPECT_EQ(a.canonical, "B");
}

TEST(ExtractAnswer, BlankOutputHasNoAnswer) {
  try {
    extract_answer("  \n\t ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoAnswerFound);
  }
}

TEST(ExtractAnswer, LastBoxedWins) {
  EXPECT_EQ(extract_answer("First \\boxed{3}, corrected: \\boxed{4}").canonical, "4");
}

// Hand-written transcripts covering every extraction tier.
TEST(ExtractAnswer, GoldenTranscripts) {
  std::ifstream in(POTFORGE_TEST_DATA "/answer_transcripts.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto a = extract_answer(j.at("text").get<std::string>(), hint_from(j.at("hint")));
    EXPECT_EQ(to_string(a.kind), j.at("kind").get<std::string>()) << j.at("text");
    EXPECT_EQ(a.canonical, j.at("canonical").get<std::string>()) << j.at("text");
    ++n;
  }
  EXPECT_EQ(n, 20);
}

TEST(Canonicalize, NumberForms) {
  EXPECT_EQ(canonicalize_answer("-0").canonical, "0");
  EXPECT_EQ(canonicalize_answer("007").canonical, "7");
  EXPECT_EQ(canonicalize_answer("\\dfrac{6}{8}").canonical, "3/4");
  EXPECT_EQ(canonicalize_answer("-6/8").canonical, "-3/4");
  EXPECT_EQ(canonicalize_answer("3.000").kind, AnswerKind::kInteger);
  EXPECT_EQ(canonicalize_answer(".5").canonical, "0.5");
}

TEST(AnswersMatch, NumericEquivalenceAcrossKinds) {
  EXPECT_TRUE(answers_match(ans("0.5", AnswerKind::kDecimal), ans("1/2", AnswerKind::kRational)));
  EXPECT_TRUE(answers_match(canonicalize_answer("2.0"), canonicalize_answer("4/2")));
  EXPECT_FALSE(answers_match(ans("0.5", AnswerKind::kDecimal), ans("1/3", AnswerKind::kRational)));
}

TEST(AnswersMatch, ChoicesCompareByLetter) {
  EXPECT_FALSE(answers_match(ans("B", AnswerKind::kChoice), ans("C", AnswerKind::kChoice)));
  EXPECT_TRUE(answers_match(canonicalize_answer("(b)", AnswerHint::kChoice), ans("B", AnswerKind::kChoice)));
}

TEST(AnswersMatch, TextIsCaseFolded) {
  EXPECT_TRUE(answers_match(canonicalize_answer("north", AnswerHint::kText),
                            canonicalize_answer("North", AnswerHint::kText)));
}

TEST(AnswersMatch, EmptyNeverMatches) {
  EXPECT_FALSE(answers_match(ans("", AnswerKind::kText), ans("", AnswerKind::kText)));
}

TEST(AnswersMatch, LargeIntegersCompareExactly) {
  EXPECT_FALSE(answers_match(canonicalize_answer("12345678901234567890"),
                             canonicalize_answer("12345678901234567891")));
}

TEST(CanonicalAnswerJson, RoundTrips) {
  const auto a = canonicalize_answer("3/6");
  nlohmann::json j = a;
  const auto back = j.get<CanonicalAnswer>();
  EXPECT_EQ(back, a);
  EXPECT_EQ(back.raw, "3/6");
}
