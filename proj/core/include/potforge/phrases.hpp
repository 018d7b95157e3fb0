#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "potforge/answer.hpp"

namespace potforge {

enum class PhraseOrigin { kSeedCorpus, kGenerator, kOptimizerRound };

struct GuidingPhrase {
  std::string id;
  std::string text;
  PhraseOrigin origin = PhraseOrigin::kSeedCorpus;
  int created_round = 0;  // 0 for seeds; r for optimizer_round(r)

  bool operator==(const GuidingPhrase&) const = default;
};

struct Question {
  std::string id;
  std::string text;
  std::optional<CanonicalAnswer> ground_truth;
  std::string dataset;

  bool operator==(const Question&) const = default;
};

inline constexpr std::size_t kDefaultMaxPhraseChars = 400;

std::string_view to_string(PhraseOrigin origin);
PhraseOrigin phrase_origin_from_string(std::string_view s);

void to_json(nlohmann::json& j, const GuidingPhrase& p);
void from_json(const nlohmann::json& j, GuidingPhrase& p);
void to_json(nlohmann::json& j, const Question& q);
void from_json(const nlohmann::json& j, Question& q);

// Empty when `text` is a valid phrase, otherwise the reason it is not.
std::optional<std::string> phrase_violation(std::string_view text, std::size_t max_chars);

// Splits a model response into individual phrases. When list markers
// ("1.", "2)", "-", "*") are present, items split on markers and blank lines
// and continuation lines are joined with a space; otherwise each nonempty
// line is one phrase. Surrounding quotes and "...:" preamble lines are
// dropped.
std::vector<std::string> split_phrase_list(std::string_view response);

// ASCII case fold used for duplicate detection.
std::string fold_case(std::string_view text);

// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view text) noexcept;

}  // namespace potforge
