#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "potforge/gateway.hpp"
#include "potforge/phrases.hpp"
#include "potforge/pool.hpp"
#include "potforge/scoring.hpp"

namespace potforge {

struct SeedGenerationOptions {
  int min_seeds = 5;
  int max_retries = 2;  // extra generator calls while below min_seeds
  std::size_t max_phrase_chars = kDefaultMaxPhraseChars;
  double temperature = 1.0;
  std::int64_t seed = 0;
};

// Asks the generator model for `n` phrases and keeps the valid, distinct
// ones (at most n). Throws kGenerationUnderflow when fewer than min_seeds
// survive after all attempts.
std::vector<GuidingPhrase> generate_seeds(Gateway& gateway, const ModelEndpoint& generator,
                                          std::string_view template_text, int n,
                                          const SeedGenerationOptions& options = {});

struct RejectedLine {
  std::size_t line = 0;
  std::string reason;
};

struct SeedSet {
  std::vector<GuidingPhrase> phrases;
  std::vector<RejectedLine> rejected;
};

// One phrase per nonempty line; '#' lines are comments. Invalid or
// duplicate lines are rejected with their line numbers. Throws kIo for an
// unreadable file and kEmptyCorpus when nothing valid remains.
SeedSet load_seed_set(const std::filesystem::path& path,
                      std::size_t max_phrase_chars = kDefaultMaxPhraseChars);

// Writes phrases one per line (the corpus format).
void write_seed_set(const std::filesystem::path& path, std::span<const GuidingPhrase> phrases);

// JSON Lines: {id, question, answer?}. MathQA ("Problem"/"options"/
// "correct"), MATH-500 ("problem"/"answer"/"unique_id") and AIME
// ("Problem"/"Answer"/"ID") records are normalized too.
std::vector<Question> load_questions(const std::filesystem::path& path,
                                     const std::string& dataset_tag = {});

struct InitialPoolResult {
  HistoryPool pool;
  std::vector<ScoredPhrase> scored;   // every successfully scored seed, input order
  std::vector<std::string> excluded;  // ids whose scoring failed
};

// Scores every seed and keeps the top k_init (score desc, text asc).
// Seeds whose scoring fails entirely are excluded and reported.
InitialPoolResult build_initial_pool(std::span<const GuidingPhrase> seeds,
                                     std::span<const Question> train_questions,
                                     Scorer& scorer, int k_init);

}  // namespace potforge
