#include "potforge/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "potforge/error.hpp"

namespace potforge {
namespace {

// Ties within this relative band go to the earlier (smaller-id) candidate.
bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 * std::max(1.0, std::abs(incumbent));
}

// Indices of `ids` in ascending id order.
std::vector<std::size_t> id_order(const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  return order;
}

std::vector<std::string> sorted_ids(const DissimilarityMatrix& m,
                                    const std::vector<std::size_t>& picked) {
  std::vector<std::string> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(m.ids()[i]);
  std::sort(out.begin(), out.end());
  return out;
}

void check_k(const DissimilarityMatrix& m, std::size_t k) {
  if (k < 1 || k > m.size()) {
    throw Error(ErrorCode::kInvalidArgument, "subset size " + std::to_string(k) +
                                                 " outside [1, " + std::to_string(m.size()) + "]");
  }
}

}  // namespace

DissimilarityMatrix::DissimilarityMatrix(std::vector<std::string> ids, std::vector<double> values)
    : ids_(std::move(ids)), d_(std::move(values)) {
  const std::size_t n = ids_.size();
  if (d_.size() != n * n) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix has " + std::to_string(d_.size()) +
                                                   " entries for " + std::to_string(n) + " ids");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (at(i, i) != 0.0) throw Error(ErrorCode::kInvalidArgument, "nonzero diagonal");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (at(i, j) != at(j, i)) throw Error(ErrorCode::kInvalidArgument, "matrix not symmetric");
    }
  }
}

DissimilarityMatrix DissimilarityMatrix::from_embeddings(
    std::vector<std::string> ids, std::span<const EmbeddingVector> embeddings) {
  if (ids.size() != embeddings.size()) {
    throw Error(ErrorCode::kInvalidArgument, "ids and embeddings differ in length");
  }
  const std::size_t n = ids.size();
  std::vector<double> d(n * n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> degenerate;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = dissimilarity(embeddings[i], embeddings[j]);
      d[i * n + j] = v;
      d[j * n + i] = v;
      if (is_degenerate(embeddings[i]) || is_degenerate(embeddings[j])) {
        degenerate.emplace_back(i, j);
      }
    }
  }
  DissimilarityMatrix m(std::move(ids), std::move(d));
  m.degenerate_ = std::move(degenerate);
  return m;
}

double DissimilarityMatrix::objective(std::span<const std::size_t> subset) const {
  double sum = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    for (std::size_t b = a + 1; b < subset.size(); ++b) sum += at(subset[a], subset[b]);
  }
  return sum;
}

std::vector<std::string> select_diverse_exact(const DissimilarityMatrix& matrix, std::size_t k,
                                              int exact_limit) {
  const std::size_t n = matrix.size();
  if (n > static_cast<std::size_t>(std::max(exact_limit, 0))) {
    throw Error(ErrorCode::kInstanceTooLarge, "exact selection over " + std::to_string(n) +
                                                  " ids exceeds limit " +
                                                  std::to_string(exact_limit));
  }
  check_k(matrix, k);

  // Combinations of positions in id order, enumerated lexicographically, so
  // the first subset reaching the optimum is the smallest sorted id tuple.
  const std::vector<std::size_t> order = id_order(matrix.ids());
  std::vector<std::size_t> pos(k);
  std::iota(pos.begin(), pos.end(), 0);
  std::vector<std::size_t> subset(k);
  std::vector<std::size_t> best;
  double best_value = -1.0;
  while (true) {
    for (std::size_t i = 0; i < k; ++i) subset[i] = order[pos[i]];
    const double v = matrix.objective(subset);
    if (best.empty() || strictly_better(v, best_value)) {
      best = subset;
      best_value = v;
    }
    std::size_t i = k;
    while (i > 0 && pos[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++pos[i - 1];
    for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
  }
  return sorted_ids(matrix, best);
}

std::vector<std::string> select_diverse_greedy(const DissimilarityMatrix& matrix,
                                               std::size_t k) {
  check_k(matrix, k);
  const std::vector<std::size_t> order = id_order(matrix.ids());
  if (k == 1) return {matrix.ids()[order.front()]};

  const std::size_t n = matrix.size();
  std::size_t first = order[0];
  std::size_t second = order[1];
  double best_pair = -1.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = matrix.at(order[a], order[b]);
      if (best_pair < 0.0 || strictly_better(v, best_pair)) {
        best_pair = v;
        first = order[a];
        second = order[b];
      }
    }
  }

  std::vector<std::size_t> picked{first, second};
  std::vector<bool> taken(n, false);
  taken[first] = taken[second] = true;
  while (picked.size() < k) {
    std::size_t best_idx = n;
    double best_gain = -1.0;
    for (std::size_t c : order) {
      if (taken[c]) continue;
      double gain = 0.0;
      for (std::size_t s : picked) gain += matrix.at(c, s);
      if (best_idx == n || strictly_better(gain, best_gain)) {
        best_idx = c;
        best_gain = gain;
      }
    }
    picked.push_back(best_idx);
    taken[best_idx] = true;
  }
  return sorted_ids(matrix, picked);
}

double dispersion(const DissimilarityMatrix& matrix, std::span<const std::string> ids) {
  std::vector<std::size_t> idx;
  idx.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = std::find(matrix.ids().begin(), matrix.ids().end(), id);
    if (it == matrix.ids().end()) throw Error(ErrorCode::kInvalidArgument, "unknown id " + id);
    idx.push_back(static_cast<std::size_t>(it - matrix.ids().begin()));
  }
  return matrix.objective(idx);
}

}  // namespace potforge
