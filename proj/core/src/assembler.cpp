#include "potforge/assembler.hpp"

#include <cctype>
#include <regex>

#include <spdlog/spdlog.h>

#include "potforge/error.hpp"

namespace potforge {
namespace {

constexpr std::string_view kInstructionV1 =
    R"(Rewrite the question below so that it naturally includes the guidance sentence.
Rules:
- Keep every number, variable and formula of the question exactly as written.
- Do not add facts, hints or answers.
- Keep the question's meaning and what it asks for unchanged.
- Output only the rewritten question, with no preamble.

Guidance: {phrase}

Question: {question})";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower_first(std::string s) {
  if (s.size() > 1 && std::isupper(static_cast<unsigned char>(s[0])) &&
      !std::isupper(static_cast<unsigned char>(s[1]))) {
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  }
  return s;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Offset just past the last sentence boundary before the final sentence,
// skipping boundaries inside $...$ spans. npos for a single sentence.
std::size_t last_sentence_start(std::string_view text) {
  std::size_t found = std::string_view::npos;
  bool in_math = false;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    const char c = text[i];
    if (c == '$') in_math = !in_math;
    if (in_math) continue;
    if ((c == '.' || c == '?' || c == '!') && std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size()) found = j;
    }
  }
  return found;
}

// Index of the punctuation ending the first sentence (outside $...$), or
// npos when the text has no terminated sentence.
std::size_t first_sentence_end(std::string_view text) {
  bool in_math = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '$') in_math = !in_math;
    if (in_math) continue;
    if ((c == '.' || c == '?' || c == '!') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      return i;
    }
  }
  return std::string_view::npos;
}

std::string strip_model_wrapping(std::string s) {
  s = trim(s);
  if (s.starts_with("```")) {
    const auto nl = s.find('\n');
    const auto close = s.rfind("```");
    if (nl != std::string::npos && close != std::string::npos && close > nl) {
      s = trim(s.substr(nl + 1, close - nl - 1));
    }
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(s.substr(1, s.size() - 2));
  return s;
}

}  // namespace

std::string_view to_string(AssemblyStrategy s) {
  switch (s) {
    case AssemblyStrategy::kPrepend: return "prepend";
    case AssemblyStrategy::kClause: return "clause";
    case AssemblyStrategy::kEmbed: return "embed";
    case AssemblyStrategy::kLlm: return "llm";
  }
  return "prepend";
}

AssemblyStrategy assembly_strategy_from_string(std::string_view s) {
  if (s == "prepend") return AssemblyStrategy::kPrepend;
  if (s == "clause") return AssemblyStrategy::kClause;
  if (s == "embed") return AssemblyStrategy::kEmbed;
  if (s == "llm") return AssemblyStrategy::kLlm;
  throw Error(ErrorCode::kInvalidArgument, "unknown assembly strategy '" + std::string(s) + "'");
}

std::string_view assembler_instruction_template() { return kInstructionV1; }

AssembledPrompt assemble(const GuidingPhrase& phrase, const Question& question,
                         AssemblyStrategy strategy) {
  AssembledPrompt out{phrase.id, question.id, {}, strategy};
  const std::string q = trim(question.text);
  switch (strategy) {
    case AssemblyStrategy::kPrepend:
      out.text = phrase.text + "\n\n" + q;
      return out;
    case AssemblyStrategy::kClause: {
      std::string clause = lower_first(phrase.text);
      while (!clause.empty() && (clause.back() == '.' || clause.back() == '!' || clause.back() == '?')) {
        clause.pop_back();
      }
      const std::size_t end = first_sentence_end(q);
      if (end == std::string::npos) {
        out.text = q + std::string(kClauseConnective) + clause;
        return out;
      }
      out.text = q.substr(0, end) + std::string(kClauseConnective) + clause + q.substr(end);
      return out;
    }
    case AssemblyStrategy::kEmbed: {
      const std::size_t at = last_sentence_start(q);
      if (at == std::string::npos) {
        out.text = phrase.text + "\n\n" + q;
        out.strategy = AssemblyStrategy::kPrepend;
        return out;
      }
      out.text = trim(q.substr(0, at)) + "\n\n" + phrase.text + "\n\n" + q.substr(at);
      return out;
    }
    case AssemblyStrategy::kLlm: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "llm assembly needs an assembler model");
}

std::vector<std::string> required_spans(std::string_view text) {
  static const std::regex kSpans(
      R"(\$\$[\s\S]+?\$\$|\$[^$]+\$|\\\([\s\S]+?\\\)|\\\[[\s\S]+?\\\]|\d+(?:[.,]\d+)*)");
  std::vector<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kSpans); it != std::sregex_iterator();
       ++it) {
    out.push_back(it->str());
  }
  return out;
}

bool validate_assembly(const AssembledPrompt& assembled, const Question& question,
                       const GuidingPhrase& phrase, std::size_t overhead_chars) {
  const std::size_t limit =
      utf8_length(question.text) + utf8_length(phrase.text) + overhead_chars;
  if (utf8_length(assembled.text) > limit) return false;
  for (const auto& span : required_spans(question.text)) {
    if (assembled.text.find(span) == std::string::npos) return false;
  }
  return true;
}

std::string render_assembler_instruction(const GuidingPhrase& phrase, const Question& question) {
  std::string out(kInstructionV1);
  // phrase first: a question containing "{phrase}" must stay verbatim
  replace_all(out, "{phrase}", phrase.text);
  const auto pos = out.rfind("{question}");
  out.replace(pos, 10, question.text);
  return out;
}

AssembledPrompt assemble_llm(Gateway& gateway, const ModelEndpoint& assembler,
                             const GuidingPhrase& phrase, const Question& question,
                             std::size_t overhead_chars, std::int64_t seed) {
  const std::string instruction = render_assembler_instruction(phrase, question);
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const auto record = gateway.complete(assembler, instruction, 0.0, seed + attempt);
      AssembledPrompt out{phrase.id, question.id, strip_model_wrapping(record.answer_text),
                          AssemblyStrategy::kLlm};
      if (!out.text.empty() && validate_assembly(out, question, phrase, overhead_chars)) return out;
      spdlog::debug("assembler output for {}/{} failed validation", phrase.id, question.id);
    } catch (const Error& e) {
      spdlog::debug("assembler call failed: {}", e.what());
    }
  }
  spdlog::warn("assembler fell back to prepend for {}/{}", phrase.id, question.id);
  return assemble(phrase, question, AssemblyStrategy::kPrepend);
}

Assembler::Assembler(Gateway& gateway, std::optional<ModelEndpoint> llm_endpoint,
                     AssemblyStrategy strategy, std::size_t overhead_chars, std::int64_t seed)
    : gateway_(gateway),
      llm_(std::move(llm_endpoint)),
      strategy_(strategy),
      overhead_(overhead_chars),
      seed_(seed) {
  if (strategy_ == AssemblyStrategy::kLlm && !llm_) {
    throw Error(ErrorCode::kInvalidArgument, "llm assembly needs an assembler endpoint");
  }
}

AssembledPrompt Assembler::operator()(const GuidingPhrase& phrase, const Question& question) {
  auto key = std::make_tuple(phrase.text, question.id, strategy_);
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(key); it != memo_.end()) {
      AssembledPrompt out = it->second;
      out.phrase_id = phrase.id;
      return out;
    }
  }
  AssembledPrompt out = strategy_ == AssemblyStrategy::kLlm
                            ? assemble_llm(gateway_, *llm_, phrase, question, overhead_, seed_)
                            : assemble(phrase, question, strategy_);
  std::lock_guard lock(mu_);
  AssembledPrompt stored = memo_.try_emplace(std::move(key), out).first->second;
  stored.phrase_id = phrase.id;
  return stored;
}

}  // namespace potforge
