#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "potforge/embedding.hpp"
#include "potforge/gateway.hpp"

namespace potforge {

struct TriggerPattern {
  std::string pattern;  // lowercase substring
  std::int64_t weight = 0;

  bool operator==(const TriggerPattern&) const = default;
};

// A deterministic stand-in for a reasoning model.
struct SimTargetConfig {
  std::int64_t base_reasoning_tokens = 300;
  std::vector<TriggerPattern> trigger_lexicon;
  std::vector<std::string> corruption_patterns;
  std::int64_t noise_amplitude = 0;
  std::uint64_t rng_seed = 0;

  bool operator==(const SimTargetConfig&) const = default;
};

// Validation messages for every violated invariant (empty when valid).
std::vector<std::string> validate(const SimTargetConfig& cfg);

// The six-pattern lexicon shipped for offline runs (weights sum to 1800,
// base 300, no noise).
SimTargetConfig default_sim_target_config();

// reasoning_tokens = base + sum of weights of distinct patterns found
// (case-insensitive) + seeded uniform noise in [-amplitude, amplitude],
// clamped at 0. The answer is derived from the question embedded in the
// prompt: an explicit "[answer: X]" tag, else the first integer expression
// "a op b". Any corruption pattern shifts it to a fixed wrong answer.
CompletionRecord sim_complete(std::string_view prompt, const SimTargetConfig& cfg,
                              std::int64_t per_call_seed);

// The answer sim_complete reports for a clean prompt, without corruption.
std::string sim_ground_truth(std::string_view prompt);

// Bag-of-words hash projection, L2-normalized. Texts without words map to
// the first basis vector. Requires dim >= 2.
EmbeddingVector sim_embed(std::string_view text, int dim, std::uint64_t rng_seed);

// Lowercase ASCII alphanumeric runs.
std::vector<std::string> sim_words(std::string_view text);

// An optimizer-model stub: reads the history and free text of a meta-prompt
// and proposes new phrases by recombining its clauses and word fragments.
// Returns a numbered list. The candidate count is read from the first
// "<n> new guiding phrase" in the prompt (default 10).
std::string sim_optimizer_complete(std::string_view meta_prompt, std::int64_t seed);

class SimTargetBackend final : public ModelBackend {
 public:
  explicit SimTargetBackend(SimTargetConfig cfg) : cfg_(std::move(cfg)) {}

  CompletionRecord complete(const ModelEndpoint& endpoint,
                            const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(const ModelEndpoint& endpoint,
                                     std::string_view text) override;

  const SimTargetConfig& config() const noexcept { return cfg_; }

 private:
  SimTargetConfig cfg_;
};

// Serves sim_embed for embedding endpoints (dimension from the endpoint,
// default 256).
class SimEmbedBackend final : public ModelBackend {
 public:
  explicit SimEmbedBackend(std::uint64_t rng_seed = 0) : seed_(rng_seed) {}

  CompletionRecord complete(const ModelEndpoint& endpoint,
                            const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(const ModelEndpoint& endpoint,
                                     std::string_view text) override;

 private:
  std::uint64_t seed_;
};

class SimOptimizerBackend final : public ModelBackend {
 public:
  CompletionRecord complete(const ModelEndpoint& endpoint,
                            const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(const ModelEndpoint& endpoint,
                                     std::string_view text) override;
};

}  // namespace potforge
