#include "potforge/pool.hpp"

#include <algorithm>
#include <set>

#include "potforge/error.hpp"

namespace potforge {

bool HistoryPool::contains_text(std::string_view text) const {
  const std::string folded = fold_case(text);
  return std::any_of(entries.begin(), entries.end(),
                     [&](const ScoredPhrase& e) { return fold_case(e.phrase.text) == folded; });
}

void to_json(nlohmann::json& j, const HistoryPool& p) {
  j = nlohmann::json{{"round", p.round}, {"entries", p.entries}};
}

void from_json(const nlohmann::json& j, HistoryPool& p) {
  p.round = j.at("round").get<int>();
  p.entries = j.at("entries").get<std::vector<ScoredPhrase>>();
}

void normalize(std::vector<ScoredPhrase>& entries) {
  std::set<std::string> seen;
  std::vector<ScoredPhrase> unique;
  unique.reserve(entries.size());
  for (auto& e : entries) {
    if (seen.insert(fold_case(e.phrase.text)).second) unique.push_back(std::move(e));
  }
  std::stable_sort(unique.begin(), unique.end(), ranks_before);
  entries = std::move(unique);
}

HistoryPool update_pool(const HistoryPool& pool, std::span<const ScoredPhrase> scored,
                        int k_score) {
  if (k_score < 1) throw Error(ErrorCode::kInvalidArgument, "k_score must be >= 1");
  std::vector<ScoredPhrase> merged = pool.entries;
  merged.insert(merged.end(), scored.begin(), scored.end());
  normalize(merged);
  if (merged.size() > static_cast<std::size_t>(k_score)) merged.resize(static_cast<std::size_t>(k_score));
  return HistoryPool{std::move(merged), pool.round + 1};
}

}  // namespace potforge
