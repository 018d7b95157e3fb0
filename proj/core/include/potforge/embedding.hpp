#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace potforge {

// A pooled semantic representation of one phrase.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

inline constexpr double kDegenerateNorm = 1e-12;

double norm(const EmbeddingVector& v) noexcept;

// True when the vector is too short for a meaningful cosine.
bool is_degenerate(const EmbeddingVector& v) noexcept;

// Coordinate-wise mean of token-level vectors. Not re-normalized.
// Throws kEmptyInput / kDimensionMismatch.
EmbeddingVector mean_pool(std::span<const EmbeddingVector> token_vectors);

// 1 - cos(a, b). Returns 1 when either side is degenerate.
// Throws kDimensionMismatch.
double dissimilarity(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace potforge
