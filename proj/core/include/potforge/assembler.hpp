#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>

#include "potforge/gateway.hpp"
#include "potforge/phrases.hpp"

namespace potforge {

enum class AssemblyStrategy { kPrepend, kClause, kEmbed, kLlm };

std::string_view to_string(AssemblyStrategy s);
AssemblyStrategy assembly_strategy_from_string(std::string_view s);

struct AssembledPrompt {
  std::string phrase_id;
  std::string question_id;
  std::string text;
  AssemblyStrategy strategy = AssemblyStrategy::kPrepend;

  bool operator==(const AssembledPrompt&) const = default;
};

inline constexpr std::string_view kClauseConnective = " — and as you do so, ";
inline constexpr std::size_t kDefaultOverheadChars = 200;

// The versioned instruction sent to an assembler model. Placeholders:
// {question} and {phrase}.
std::string_view assembler_instruction_template();
inline constexpr std::string_view kAssemblerTemplateVersion = "v1";

// Deterministic placements. kLlm is rejected with kInvalidArgument.
AssembledPrompt assemble(const GuidingPhrase& phrase, const Question& question,
                         AssemblyStrategy strategy);

// True iff every numeric literal and math-mode span of the question occurs
// verbatim in the assembled text and its length stays within
// len(question) + len(phrase) + overhead_chars.
bool validate_assembly(const AssembledPrompt& assembled, const Question& question,
                       const GuidingPhrase& phrase,
                       std::size_t overhead_chars = kDefaultOverheadChars);

// Numeric literals and $..$, $$..$$, \(..\), \[..\] spans of `text`.
std::vector<std::string> required_spans(std::string_view text);

std::string render_assembler_instruction(const GuidingPhrase& phrase, const Question& question);

// Asks the assembler model to merge phrase and question; one retry, then
// falls back to prepend. Never throws for model failures.
AssembledPrompt assemble_llm(Gateway& gateway, const ModelEndpoint& assembler,
                             const GuidingPhrase& phrase, const Question& question,
                             std::size_t overhead_chars = kDefaultOverheadChars,
                             std::int64_t seed = 0);

// Memoizes assembled prompts per (phrase text, question id, strategy) so the
// text scored during optimization is the text deployed later.
class Assembler {
 public:
  Assembler(Gateway& gateway, std::optional<ModelEndpoint> llm_endpoint,
            AssemblyStrategy strategy, std::size_t overhead_chars = kDefaultOverheadChars,
            std::int64_t seed = 0);

  AssembledPrompt operator()(const GuidingPhrase& phrase, const Question& question);

  AssemblyStrategy strategy() const noexcept { return strategy_; }

 private:
  Gateway& gateway_;
  std::optional<ModelEndpoint> llm_;
  AssemblyStrategy strategy_;
  std::size_t overhead_;
  std::int64_t seed_;
  std::mutex mu_;
  std::map<std::tuple<std::string, std::string, AssemblyStrategy>, AssembledPrompt> memo_;
};

}  // namespace potforge
