#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "potforge/embedding.hpp"

namespace potforge {

// Pairwise 1 - cos over a set of phrase embeddings.
class DissimilarityMatrix {
 public:
  DissimilarityMatrix() = default;
  // `values` is row-major n x n; must be symmetric with a zero diagonal.
  DissimilarityMatrix(std::vector<std::string> ids, std::vector<double> values);

  static DissimilarityMatrix from_embeddings(std::vector<std::string> ids,
                                             std::span<const EmbeddingVector> embeddings);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  double at(std::size_t i, std::size_t j) const noexcept { return d_[i * ids_.size() + j]; }

  // Pairs (i, j) whose dissimilarity fell back to 1 because of a
  // degenerate embedding.
  const std::vector<std::pair<std::size_t, std::size_t>>& degenerate_pairs() const noexcept {
    return degenerate_;
  }

  // Sum of d over unordered pairs of the given indices.
  double objective(std::span<const std::size_t> subset) const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> d_;
  std::vector<std::pair<std::size_t, std::size_t>> degenerate_;
};

inline constexpr int kDefaultExactLimit = 15;

// Exhaustive argmax of the pairwise-sum objective over all k-subsets. Ties
// go to the lexicographically smallest sorted id tuple. Returns sorted ids.
// Throws kInstanceTooLarge when n > exact_limit, kInvalidArgument unless
// 1 <= k <= n.
std::vector<std::string> select_diverse_exact(const DissimilarityMatrix& matrix, std::size_t k,
                                              int exact_limit = kDefaultExactLimit);

// Greedy farthest-sum construction: start from the most dissimilar pair,
// then repeatedly add the id with the largest summed dissimilarity to the
// selection. Returns sorted ids.
std::vector<std::string> select_diverse_greedy(const DissimilarityMatrix& matrix,
                                               std::size_t k);

// Objective value of a set of ids.
double dispersion(const DissimilarityMatrix& matrix, std::span<const std::string> ids);

}  // namespace potforge
