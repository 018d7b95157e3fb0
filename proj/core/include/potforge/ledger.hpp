#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "potforge/config.hpp"
#include "potforge/optimizer.hpp"
#include "potforge/phrases.hpp"
#include "potforge/pool.hpp"
#include "potforge/scoring.hpp"

namespace potforge {

// Layout of a run directory:
//
//   config.json            {digest, config}
//   inputs/seeds.jsonl     the seed phrases the run started from
//   inputs/train.jsonl     the training questions
//   initial_pool.jsonl     score events for seeds + the H_0 pool_snapshot
//   rounds/round_<r>.jsonl meta_prompt, candidate, score, filter, pool_snapshot
//   run.json               summary, written once the loop stops
//   cache/                 response cache
//   usage.jsonl, run.log   accounting and timestamps (not part of replay)
//
// Every ledger file is written whole to a temp file and renamed into place.
class RunLedger {
 public:
  // Creates the directory (or reopens a compatible one). Throws
  // kConfigDrift when an existing snapshot has a different digest.
  static RunLedger create(const std::filesystem::path& dir, const RunConfig& cfg);

  // Opens an existing run. Throws kIo when there is no config snapshot.
  static RunLedger open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const RunConfig& config() const noexcept { return cfg_; }
  const std::string& config_digest() const noexcept { return digest_; }
  std::filesystem::path cache_dir() const { return dir_ / "cache"; }
  std::filesystem::path rounds_dir() const { return dir_ / "rounds"; }

  void write_inputs(std::span<const GuidingPhrase> seeds, std::span<const Question> train);
  bool has_inputs() const;
  std::vector<GuidingPhrase> read_seeds() const;
  std::vector<Question> read_train() const;

  void persist_initial_pool(const HistoryPool& pool, std::span<const ScoredPhrase> scored,
                            std::span<const std::string> excluded,
                            std::span<const double> best_by_round, const ScoredPhrase& best);
  bool has_initial_pool() const;

  // Throws kDuplicateRound when round_<r> already exists and
  // kInvalidArgument when r is not the next round index.
  void persist_round(const RoundRecord& record);

  void write_summary(const OptimizationRun& run);
  std::optional<OptimizationRun> read_summary() const;

  // Rounds present on disk, ascending.
  std::vector<int> completed_rounds() const;

 private:
  RunLedger(std::filesystem::path dir, RunConfig cfg, std::string digest)
      : dir_(std::move(dir)), cfg_(std::move(cfg)), digest_(std::move(digest)) {}

  std::filesystem::path dir_;
  RunConfig cfg_;
  std::string digest_;
};

// Optimizer state reconstructed from a ledger.
struct ResumeState {
  RunConfig config;
  HistoryPool initial_pool;
  HistoryPool pool;
  int next_round = 0;
  std::vector<double> best_by_round;
  ScoredPhrase best;
  std::map<std::string, ScoredPhrase> memo;  // fold_case(text) -> first score
  std::vector<RoundSummary> rounds;
  bool finished = false;
};

// Reads the last complete pool snapshot. A truncated final line is dropped;
// a round file left without a snapshot is discarded so the round reruns.
// Throws kConfigDrift when `current` is given and differs from the
// snapshot, kIo for a missing/empty run directory, kCorruptLedger for
// unparseable content elsewhere.
ResumeState resume_run(const std::filesystem::path& run_dir,
                       const std::optional<RunConfig>& current = std::nullopt);

// Writes `lines` as JSON Lines to `path` atomically.
void write_jsonl_atomic(const std::filesystem::path& path, std::span<const nlohmann::json> lines);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace potforge
