#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "potforge/answer.hpp"
#include "potforge/assembler.hpp"
#include "potforge/config.hpp"
#include "potforge/gateway.hpp"
#include "potforge/phrases.hpp"

namespace potforge {

struct QuestionScore {
  std::string question_id;
  std::int64_t attacked_tokens = 0;
  std::int64_t baseline_tokens = 1;
  double inflation = 1.0;
  bool consistent = true;

  bool operator==(const QuestionScore&) const = default;
};

struct ScoreBreakdown {
  std::string phrase_id;
  std::vector<QuestionScore> per_question;
  double mean_inflation = 0.0;
  double consistency_rate = 0.0;
  double score = 0.0;

  bool operator==(const ScoreBreakdown&) const = default;
};

struct ScoredPhrase {
  GuidingPhrase phrase;
  ScoreBreakdown breakdown;

  double score() const noexcept { return breakdown.score; }
  bool operator==(const ScoredPhrase&) const = default;
};

void to_json(nlohmann::json& j, const QuestionScore& q);
void from_json(const nlohmann::json& j, QuestionScore& q);
void to_json(nlohmann::json& j, const ScoreBreakdown& b);
void from_json(const nlohmann::json& j, ScoreBreakdown& b);
void to_json(nlohmann::json& j, const ScoredPhrase& s);
void from_json(const nlohmann::json& j, ScoredPhrase& s);

// alpha * mean(inflations) + beta * consistency_rate over the given
// per-question results. Throws kAllQuestionsFailed when empty.
ScoreBreakdown combine_scores(std::string phrase_id, std::vector<QuestionScore> per_question,
                              double alpha, double beta);

// Strict weak ordering: score descending, then text ascending.
bool ranks_before(const ScoredPhrase& a, const ScoredPhrase& b) noexcept;

struct Baseline {
  std::int64_t tokens = 1;
  CanonicalAnswer answer;
};

// Clean-question baselines, computed once per (target, question).
class BaselineStore {
 public:
  BaselineStore(Gateway& gateway, std::int64_t seed) : gateway_(gateway), seed_(seed) {}

  // Throws the gateway error on failure; the question is then remembered as
  // unusable and later lookups fail fast with kNetwork.
  Baseline get(const ModelEndpoint& target, const Question& question);

  bool usable(const ModelEndpoint& target, const Question& question) const;
  std::int64_t calls() const;

 private:
  Gateway& gateway_;
  std::int64_t seed_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, Baseline> cache_;
  std::set<std::pair<std::string, std::string>> unusable_;
  std::int64_t calls_ = 0;
};

// Applies the adversarial score to phrases against the configured scorer
// target over a training question set.
class Scorer {
 public:
  Scorer(Gateway& gateway, const RunConfig& cfg);

  // Throws kAllQuestionsFailed when no question yields a usable result and
  // kInvalidArgument on an empty question list or negative weights.
  ScoreBreakdown score(const GuidingPhrase& phrase, std::span<const Question> questions);

  BaselineStore& baselines() noexcept { return baselines_; }
  Assembler& assembler() noexcept { return assembler_; }
  const ModelEndpoint& target() const noexcept { return target_; }
  const RunConfig& config() const noexcept { return cfg_; }

 private:
  std::optional<QuestionScore> score_one(const GuidingPhrase& phrase, const Question& question);

  Gateway& gateway_;
  const RunConfig& cfg_;
  ModelEndpoint target_;
  BaselineStore baselines_;
  Assembler assembler_;
};

}  // namespace potforge
