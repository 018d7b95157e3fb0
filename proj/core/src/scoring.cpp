#include "potforge/scoring.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "potforge/error.hpp"
#include "potforge/parallel.hpp"

namespace potforge {
namespace {

CanonicalAnswer extract_or_empty(const std::string& text) {
  try {
    return extract_answer(text);
  } catch (const Error&) {
    return {};
  }
}

std::optional<ModelEndpoint> assembler_endpoint(Gateway& gateway, const RunConfig& cfg) {
  if (effective_strategy(cfg) != AssemblyStrategy::kLlm) return std::nullopt;
  return gateway.endpoint(cfg.roles.assembler);
}

}  // namespace

void to_json(nlohmann::json& j, const QuestionScore& q) {
  j = nlohmann::json{{"question_id", q.question_id},
                     {"attacked_tokens", q.attacked_tokens},
                     {"baseline_tokens", q.baseline_tokens},
                     {"inflation", q.inflation},
                     {"consistent", q.consistent}};
}

void from_json(const nlohmann::json& j, QuestionScore& q) {
  q.question_id = j.at("question_id").get<std::string>();
  q.attacked_tokens = j.at("attacked_tokens").get<std::int64_t>();
  q.baseline_tokens = j.at("baseline_tokens").get<std::int64_t>();
  q.inflation = j.at("inflation").get<double>();
  q.consistent = j.at("consistent").get<bool>();
}

void to_json(nlohmann::json& j, const ScoreBreakdown& b) {
  j = nlohmann::json{{"phrase_id", b.phrase_id},
                     {"per_question", b.per_question},
                     {"mean_inflation", b.mean_inflation},
                     {"consistency_rate", b.consistency_rate},
                     {"score", b.score}};
}

void from_json(const nlohmann::json& j, ScoreBreakdown& b) {
  b.phrase_id = j.at("phrase_id").get<std::string>();
  b.per_question = j.at("per_question").get<std::vector<QuestionScore>>();
  b.mean_inflation = j.at("mean_inflation").get<double>();
  b.consistency_rate = j.at("consistency_rate").get<double>();
  b.score = j.at("score").get<double>();
}

void to_json(nlohmann::json& j, const ScoredPhrase& s) {
  j = nlohmann::json{{"phrase", s.phrase}, {"breakdown", s.breakdown}};
}

void from_json(const nlohmann::json& j, ScoredPhrase& s) {
  s.phrase = j.at("phrase").get<GuidingPhrase>();
  s.breakdown = j.at("breakdown").get<ScoreBreakdown>();
}

ScoreBreakdown combine_scores(std::string phrase_id, std::vector<QuestionScore> per_question,
                              double alpha, double beta) {
  if (per_question.empty()) {
    throw Error(ErrorCode::kAllQuestionsFailed, "no usable question for phrase " + phrase_id);
  }
  double inflation_sum = 0.0;
  std::size_t consistent = 0;
  for (const auto& q : per_question) {
    inflation_sum += q.inflation;
    if (q.consistent) ++consistent;
  }
  const double n = static_cast<double>(per_question.size());
  ScoreBreakdown b;
  b.phrase_id = std::move(phrase_id);
  b.mean_inflation = inflation_sum / n;
  b.consistency_rate = static_cast<double>(consistent) / n;
  b.score = alpha * b.mean_inflation + beta * b.consistency_rate;
  b.per_question = std::move(per_question);
  return b;
}

bool ranks_before(const ScoredPhrase& a, const ScoredPhrase& b) noexcept {
  if (a.score() != b.score()) return a.score() > b.score();
  return a.phrase.text < b.phrase.text;
}

Baseline BaselineStore::get(const ModelEndpoint& target, const Question& question) {
  const auto key = std::make_pair(target.id, question.id);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (unusable_.contains(key)) {
      throw Error(ErrorCode::kNetwork,
                  "baseline for " + question.id + " on " + target.id + " is unavailable");
    }
  }

  CompletionRecord record;
  try {
    {
      std::lock_guard lock(mu_);
      ++calls_;
    }
    record = gateway_.complete(target, question.text, 0.0, seed_);
  } catch (const Error&) {
    std::lock_guard lock(mu_);
    unusable_.insert(key);
    throw;
  }

  Baseline b;
  b.tokens = record.reasoning_tokens;
  if (b.tokens < 1) {
    spdlog::warn("baseline for {} on {} reported {} reasoning tokens; using 1", question.id,
                 target.id, record.reasoning_tokens);
    gateway_.note_warning();
    b.tokens = 1;
  }
  b.answer = extract_or_empty(record.answer_text);

  std::lock_guard lock(mu_);
  return cache_.try_emplace(key, std::move(b)).first->second;
}

bool BaselineStore::usable(const ModelEndpoint& target, const Question& question) const {
  std::lock_guard lock(mu_);
  return !unusable_.contains(std::make_pair(target.id, question.id));
}

std::int64_t BaselineStore::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

Scorer::Scorer(Gateway& gateway, const RunConfig& cfg)
    : gateway_(gateway),
      cfg_(cfg),
      target_(gateway.endpoint(cfg.roles.scorer_target)),
      baselines_(gateway, scoring_seed(cfg)),
      assembler_(gateway, assembler_endpoint(gateway, cfg), effective_strategy(cfg),
                 cfg.overhead_chars, scoring_seed(cfg)) {}

ScoreBreakdown Scorer::score(const GuidingPhrase& phrase, std::span<const Question> questions) {
  if (questions.empty()) throw Error(ErrorCode::kInvalidArgument, "no training questions");
  if (cfg_.alpha < 0.0 || cfg_.beta < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "score weights must be non-negative");
  }
  auto results = parallel_map(questions.size(), cfg_.workers,
                              [&](std::size_t i) { return score_one(phrase, questions[i]); });
  std::vector<QuestionScore> usable;
  for (auto& r : results) {
    if (r) usable.push_back(std::move(*r));
  }
  return combine_scores(phrase.id, std::move(usable), cfg_.alpha, cfg_.beta);
}

std::optional<QuestionScore> Scorer::score_one(const GuidingPhrase& phrase,
                                               const Question& question) {
  try {
    const Baseline baseline = baselines_.get(target_, question);
    const AssembledPrompt prompt = assembler_(phrase, question);
    const auto record = gateway_.complete(target_, prompt.text, 0.0, scoring_seed(cfg_));
    const CanonicalAnswer attacked = extract_or_empty(record.answer_text);

    QuestionScore q;
    q.question_id = question.id;
    q.attacked_tokens = record.reasoning_tokens;
    q.baseline_tokens = baseline.tokens;
    q.inflation = static_cast<double>(q.attacked_tokens) / static_cast<double>(q.baseline_tokens);
    q.consistent = answers_match(attacked, baseline.answer);
    if (!std::isfinite(q.inflation)) return std::nullopt;
    return q;
  } catch (const Error& e) {
    spdlog::warn("scoring {} on {} failed: {}", phrase.id, question.id, e.what());
    return std::nullopt;
  }
}

}  // namespace potforge
