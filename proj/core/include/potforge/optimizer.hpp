#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "potforge/config.hpp"
#include "potforge/gateway.hpp"
#include "potforge/phrases.hpp"
#include "potforge/pool.hpp"
#include "potforge/scoring.hpp"

namespace potforge {

class RunLedger;

struct MetaPrompt {
  std::string objective_text;
  std::string history_block;  // "<phrase> → <score>" lines, ascending score
  std::string instruction_text;
  std::string rendered;

  std::string digest() const;
  bool operator==(const MetaPrompt&) const = default;
};

// Renders objective, history (ascending score, two decimals) and
// instructions, separated by blank lines. Throws kInvalidArgument for an
// empty pool.
MetaPrompt build_meta_prompt(std::string_view objective, const HistoryPool& pool,
                             std::string_view instructions);

// Replaces "{m}" in the instruction template.
std::string render_instructions(std::string_view instructions_template, int m);

struct CandidateBatch {
  std::vector<GuidingPhrase> phrases;
  bool degraded = false;  // the optimizer model failed or produced nothing usable
};

struct CandidateOptions {
  CandidateMode mode = CandidateMode::kBatched;
  std::size_t max_phrase_chars = kDefaultMaxPhraseChars;
  std::string instructions_template{kDefaultInstructions};  // used in per-call mode
  std::string objective{kDefaultObjective};
};

// Samples up to m phrases from the optimizer model. Invalid phrases,
// duplicates and phrases already in `pool` are dropped. Never throws for
// model failures: the batch is returned empty and marked degraded.
CandidateBatch generate_candidates(Gateway& gateway, const ModelEndpoint& optimizer_model,
                                   const MetaPrompt& meta, int m, double temperature,
                                   std::int64_t round_seed, const HistoryPool& pool,
                                   int round, const CandidateOptions& options = {});

// True iff each of the last `patience` entries improved the running best
// by less than epsilon. Needs at least patience + 1 entries.
bool check_convergence(std::span<const double> best_by_round, double epsilon, int patience);

enum class StopReason { kMaxRounds, kConverged, kAborted };
std::string_view to_string(StopReason r);
StopReason stop_reason_from_string(std::string_view s);

struct RoundRecord {
  int round = 0;
  MetaPrompt meta_prompt;
  std::vector<GuidingPhrase> candidates;
  std::vector<ScoredPhrase> scored;       // newly scored this round
  std::vector<std::string> memo_hits;     // candidate ids answered from earlier scores
  std::vector<std::string> score_failures;
  HistoryPool merged;                     // top-k_score before filtering
  std::vector<std::string> evicted;       // dropped by the diversity filter
  HistoryPool pool_after;
  std::vector<double> best_by_round;
  ScoredPhrase best;
  bool degraded = false;
};

struct RoundSummary {
  int round = 0;
  std::string meta_prompt_digest;
  std::vector<GuidingPhrase> candidates;
  HistoryPool pool_after;

  bool operator==(const RoundSummary&) const = default;
};

struct OptimizationRun {
  nlohmann::json config_snapshot;
  HistoryPool initial_pool;
  std::vector<RoundSummary> rounds;
  ScoredPhrase best;
  std::vector<double> best_by_round;
  StopReason stop_reason = StopReason::kMaxRounds;
  HistoryPool final_pool;
};

struct OptimizerHooks {
  // Called after each round is persisted. Tests throw from here to
  // simulate a crash.
  std::function<void(const RoundRecord&)> after_round;
};

// Dispersion filter applied to the merged pool: keeps k_init entries chosen by
// embedding dispersion, returned in rank order.
HistoryPool diversity_filter(Gateway& gateway, const ModelEndpoint& embedder,
                             const HistoryPool& merged, int k_init,
                             DiversitySelector selector, int exact_limit,
                             std::vector<std::string>* evicted = nullptr);

// Runs the full loop: initial pool from seeds (corpus or generator), then
// rounds until R or convergence, persisting every round to `ledger`.
// Resumes automatically when the ledger already holds completed rounds.
OptimizationRun run_optimization(const RunConfig& cfg, Gateway& gateway, RunLedger& ledger,
                                 const OptimizerHooks& hooks = {});

// Same loop, seeded directly (no ledger lookup of seeds).
OptimizationRun run_optimization(const RunConfig& cfg, Gateway& gateway, RunLedger& ledger,
                                 std::span<const GuidingPhrase> seeds,
                                 std::span<const Question> train,
                                 const OptimizerHooks& hooks = {});

}  // namespace potforge
