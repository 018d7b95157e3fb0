#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "potforge/scoring.hpp"

namespace potforge {

// The ranked (phrase, score) history threaded between rounds.
// Sorted by score descending then text ascending; texts are unique
// ignoring ASCII case.
struct HistoryPool {
  std::vector<ScoredPhrase> entries;
  int round = 0;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  bool contains_text(std::string_view text) const;

  bool operator==(const HistoryPool&) const = default;
};

void to_json(nlohmann::json& j, const HistoryPool& p);
void from_json(const nlohmann::json& j, HistoryPool& p);

// Sorts and drops case-insensitive duplicate texts (first occurrence wins).
void normalize(std::vector<ScoredPhrase>& entries);

// Union by text (existing entries keep their score), sort, truncate to
// k_score, round + 1. Throws kInvalidArgument when k_score < 1.
HistoryPool update_pool(const HistoryPool& pool, std::span<const ScoredPhrase> scored,
                        int k_score);

}  // namespace potforge
