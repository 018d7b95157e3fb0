#include "potforge/embedding.hpp"

#include <cmath>
#include <string>

#include "potforge/error.hpp"

namespace potforge {

double norm(const EmbeddingVector& v) noexcept {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

bool is_degenerate(const EmbeddingVector& v) noexcept { return norm(v) < kDegenerateNorm; }

EmbeddingVector mean_pool(std::span<const EmbeddingVector> token_vectors) {
  if (token_vectors.empty()) throw Error(ErrorCode::kEmptyInput, "mean_pool of no vectors");
  const std::size_t dim = token_vectors.front().dim();
  EmbeddingVector out{std::vector<double>(dim, 0.0)};
  for (const auto& v : token_vectors) {
    if (v.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "mean_pool: dimension " + std::to_string(v.dim()) + " != " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) out.values[i] += v.values[i];
  }
  const double n = static_cast<double>(token_vectors.size());
  for (double& x : out.values) x /= n;
  return out;
}

double dissimilarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dissimilarity: dimension " + std::to_string(a.dim()) + " != " +
                    std::to_string(b.dim()));
  }
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    aa += a.values[i] * a.values[i];
    bb += b.values[i] * b.values[i];
  }
  if (std::sqrt(aa) < kDegenerateNorm || std::sqrt(bb) < kDegenerateNorm) return 1.0;
  // sqrt(aa * bb) rather than |a||b| keeps a == b and a == -b exact.
  double cos = dot / std::sqrt(aa * bb);
  // rounding can push |cos| past 1 for (anti)parallel vectors
  if (cos > 1.0) cos = 1.0;
  if (cos < -1.0) cos = -1.0;
  return 1.0 - cos;
}

}  // namespace potforge
