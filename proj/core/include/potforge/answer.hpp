#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace potforge {

enum class AnswerKind { kInteger, kRational, kDecimal, kChoice, kText };

// What the caller expects the answer to look like. kAny tries numbers first,
// then parenthesized choice letters.
enum class AnswerHint { kAny, kNumeric, kChoice, kText };

struct CanonicalAnswer {
  std::string raw;
  std::string canonical;
  AnswerKind kind = AnswerKind::kText;

  bool operator==(const CanonicalAnswer& other) const {
    return kind == other.kind && canonical == other.canonical;
  }
};

std::string_view to_string(AnswerKind kind);
AnswerKind answer_kind_from_string(std::string_view s);

void to_json(nlohmann::json& j, const CanonicalAnswer& a);
void from_json(const nlohmann::json& j, CanonicalAnswer& a);

// Pulls the final answer out of free-form model output.
//
// Tiers, first match wins:
//   1. \boxed{...} or an explicit marker ("final answer:", "answer is", ...)
//   2. the last standalone number (or choice letter) in the final sentence
//   3. the trimmed last line, as text
//
// Throws kNoAnswerFound when the text is blank.
CanonicalAnswer extract_answer(std::string_view text, AnswerHint hint = AnswerHint::kAny);

// Normal form of an already-isolated answer span (used for ground truth).
CanonicalAnswer canonicalize_answer(std::string_view span, AnswerHint hint = AnswerHint::kAny);

// Numeric kinds compare by value (relative tolerance 1e-9); choice and text
// compare their canonical strings. Empty canonicals never match.
bool answers_match(const CanonicalAnswer& a, const CanonicalAnswer& b);

}  // namespace potforge
