#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "potforge/assembler.hpp"
#include "potforge/error.hpp"
#include "test_support.hpp"

using namespace potforge;
using potforge::testing::ScriptedBackend;

namespace {

const GuidingPhrase kZ1{"seed-001",
                        "You are an experienced logician. Try to analyze the problem step by step "
                        "from multiple perspectives",
                        PhraseOrigin::kSeedCorpus, 0};

Question question(std::string text, std::string id = "q1") { return Question{id, text, std::nullopt, "t"}; }

struct LlmFixture {
  explicit LlmFixture(std::vector<std::string> replies)
      : backend(ScriptedBackend::replies(std::move(replies))), endpoint(potforge::testing::completion_endpoint("asm")) {
    gateway.add_endpoint(endpoint, backend);
  }
  Gateway gateway;
  std::shared_ptr<ScriptedBackend> backend;
  ModelEndpoint endpoint;
};

}  // namespace

TEST(Assemble, GoldenStrings) {
  std::ifstream in(POTFORGE_TEST_DATA "/assembler_golden.json");
  ASSERT_TRUE(in);
  const auto golden = nlohmann::json::parse(in);
  const GuidingPhrase phrase{"seed-001", golden.at("phrase").get<std::string>(), PhraseOrigin::kSeedCorpus, 0};
  for (const auto& c : golden.at("cases")) {
    const auto strategy = assembly_strategy_from_string(c.at("strategy").get<std::string>());
    const auto out = assemble(phrase, question(c.at("question")), strategy);
    EXPECT_EQ(out.text, c.at("text").get<std::string>()) << c.at("question");
    EXPECT_EQ(to_string(out.strategy), c.at("recorded").get<std::string>());
    EXPECT_EQ(out.phrase_id, "seed-001");
    EXPECT_EQ(out.question_id, "q1");
  }
}

TEST(Assemble, ClauseLeavesLaterSentencesUntouched) {
  const auto out = assemble(kZ1, question("Solve for x. Show nothing."), AssemblyStrategy::kClause);
  EXPECT_TRUE(out.text.starts_with("Solve for x" + std::string(kClauseConnective)));
  EXPECT_TRUE(out.text.ends_with(". Show nothing."));
}

TEST(Assemble, EmbedOnOneSentenceEqualsPrepend) {
  const auto q = question("How many primes are below 20?");
  EXPECT_EQ(assemble(kZ1, q, AssemblyStrategy::kEmbed).text, assemble(kZ1, q, AssemblyStrategy::kPrepend).text);
}

TEST(Assemble, EmbedDoesNotSplitInsideMath) {
  const auto out = assemble(kZ1, question("Let $x = 2. y$ be given. Find x?"), AssemblyStrategy::kEmbed);
  EXPECT_NE(out.text.find("$x = 2. y$"), std::string::npos);
  EXPECT_EQ(out.strategy, AssemblyStrategy::kEmbed);
}

TEST(Assemble, LlmStrategyNeedsAModel) {
  EXPECT_THROW(assemble(kZ1, question("1+1?"), AssemblyStrategy::kLlm), Error);
}

TEST(Assemble, IsPure) {
  const auto q = question("A shop sells 3 pens for $4.50. What does one pen cost?");
  for (auto s : {AssemblyStrategy::kPrepend, AssemblyStrategy::kClause, AssemblyStrategy::kEmbed}) {
    EXPECT_EQ(assemble(kZ1, q, s), assemble(kZ1, q, s));
  }
}

// Any phrase and question: prepend always passes validation.
TEST(ValidateAssembly, PrependAlwaysPasses) {
  std::mt19937 rng(3);
  const std::string alphabet = "abc xyz 0123456789 $+-*/.?";
  for (int i = 0; i < 500; ++i) {
    std::string qt, pt;
    for (int k = 0, n = 1 + static_cast<int>(rng() % 80); k < n; ++k) qt.push_back(alphabet[rng() % alphabet.size()]);
    for (int k = 0, n = 1 + static_cast<int>(rng() % 60); k < n; ++k) pt.push_back(alphabet[rng() % alphabet.size()]);
    const GuidingPhrase p{"p", pt, PhraseOrigin::kSeedCorpus, 0};
    const auto q = question(qt);
    EXPECT_TRUE(validate_assembly(assemble(p, q, AssemblyStrategy::kPrepend), q, p)) << qt;
  }
}

TEST(ValidateAssembly, MissingNumeralFails) {
  const auto q = question("Add 37 and 5.");
  AssembledPrompt a{"p", "q1", "Carefully add 5 to the number.", AssemblyStrategy::kLlm};
  EXPECT_FALSE(validate_assembly(a, q, kZ1));
}

TEST(ValidateAssembly, OverlongTextFails) {
  const auto q = question("Add 37 and 5.");
  std::string text = q.text + " " + kZ1.text;
  while (text.size() < 3 * (q.text.size() + kZ1.text.size())) text += " pad";
  text += std::string(kDefaultOverheadChars, 'x');
  EXPECT_FALSE(validate_assembly({"p", "q1", text, AssemblyStrategy::kLlm}, q, kZ1));
}

TEST(ValidateAssembly, MathSpansMustSurvive) {
  const auto q = question("If $x^2 = 9$, what is x?");
  EXPECT_EQ(required_spans(q.text), (std::vector<std::string>{"$x^2 = 9$"}));
  EXPECT_FALSE(validate_assembly({"p", "q1", "If x squared is 9, what is x?", AssemblyStrategy::kLlm}, q, kZ1));
}

TEST(AssembleLlm, AcceptsAValidMerge) {
  LlmFixture f({"Thinking step by step from multiple perspectives, add 37 and 5."});
  const auto out = assemble_llm(f.gateway, f.endpoint, kZ1, question("Add 37 and 5."));
  EXPECT_EQ(out.strategy, AssemblyStrategy::kLlm);
  EXPECT_EQ(out.text, "Thinking step by step from multiple perspectives, add 37 and 5.");
  EXPECT_EQ(f.backend->calls.load(), 1);
}

TEST(AssembleLlm, DroppedNumeralRetriesThenFallsBack) {
  LlmFixture f({"Add the numbers from multiple perspectives: 5."});
  const auto q = question("Add 37 and 5.");
  const auto out = assemble_llm(f.gateway, f.endpoint, kZ1, q);
  EXPECT_EQ(out.strategy, AssemblyStrategy::kPrepend);
  EXPECT_EQ(out.text, assemble(kZ1, q, AssemblyStrategy::kPrepend).text);
  EXPECT_EQ(f.backend->calls.load(), 2);
}

TEST(AssembleLlm, SecondAttemptCanSucceed) {
  LlmFixture f({"no numbers here", "```\nFrom multiple perspectives, add 37 and 5.\n```"});
  const auto out = assemble_llm(f.gateway, f.endpoint, kZ1, question("Add 37 and 5."));
  EXPECT_EQ(out.strategy, AssemblyStrategy::kLlm);
  EXPECT_EQ(out.text, "From multiple perspectives, add 37 and 5.");
}

// The assembler model answers the question instead of merging it.
TEST(AssembleLlm, AnsweringInsteadOfMergingIsRejected) {
  LlmFixture f({"Tom ends up with 42 apples in total."});
  const auto q = question("Tom has 37 apples and buys 5 more. How many apples does he have now?");
  const auto out = assemble_llm(f.gateway, f.endpoint, kZ1, q);
  EXPECT_EQ(out.strategy, AssemblyStrategy::kPrepend);
}

TEST(AssembleLlm, ModelFailureFallsBack) {
  Gateway g;
  auto ep = potforge::testing::completion_endpoint("asm");
  g.add_endpoint(ep, std::make_shared<ScriptedBackend>([](const CompletionRequest&) -> CompletionRecord {
                   throw Error(ErrorCode::kNetwork, "down");
                 }));
  const auto out = assemble_llm(g, ep, kZ1, question("Add 37 and 5."));
  EXPECT_EQ(out.strategy, AssemblyStrategy::kPrepend);
}

TEST(AssemblerMemo, SameTextReusesTheAssemblyUnderANewId) {
  LlmFixture f({"From multiple perspectives, add 37 and 5."});
  Assembler assembler(f.gateway, f.endpoint, AssemblyStrategy::kLlm);
  const auto q = question("Add 37 and 5.");
  const auto a = assembler(kZ1, q);
  GuidingPhrase renamed = kZ1;
  renamed.id = "gen-004";
  const auto b = assembler(renamed, q);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(b.phrase_id, "gen-004");
  EXPECT_EQ(f.backend->calls.load(), 1);
}

TEST(AssemblerInstruction, ContainsBothInputsVerbatim) {
  const auto q = question("What is {phrase} + 1?");
  const auto text = render_assembler_instruction(kZ1, q);
  EXPECT_NE(text.find(kZ1.text), std::string::npos);
  EXPECT_NE(text.find(q.text), std::string::npos);
}
