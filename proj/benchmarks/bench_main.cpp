#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "potforge/diversity.hpp"
#include "potforge/gateway.hpp"
#include "potforge/sim_target.hpp"

using namespace potforge;

namespace {

DissimilarityMatrix random_matrix(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<EmbeddingVector> vs(n, EmbeddingVector{std::vector<double>(64)});
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : vs[i].values) x = g(rng);
    ids.push_back("g" + std::to_string(i));
  }
  return DissimilarityMatrix::from_embeddings(std::move(ids), vs);
}

void BM_GreedyDispersion(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)));
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(select_diverse_greedy(m, k));
}
BENCHMARK(BM_GreedyDispersion)->Args({15, 8})->Args({40, 30})->Args({200, 30});

void BM_ExactDispersion(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)));
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(select_diverse_exact(m, k));
}
BENCHMARK(BM_ExactDispersion)->Args({10, 5})->Args({15, 8});

void BM_SimEmbed(benchmark::State& state) {
  const std::string text =
      "Assume there are multiple possible interpretations of this question. Explore each one and the "
      "reasoning behind it";
  for (auto _ : state) benchmark::DoNotOptimize(sim_embed(text, static_cast<int>(state.range(0)), 0));
}
BENCHMARK(BM_SimEmbed)->Arg(256)->Arg(1024);

void BM_CacheKey(benchmark::State& state) {
  const std::string prompt(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) benchmark::DoNotOptimize(cache_key("sim/default", prompt, 0.0, 7));
}
BENCHMARK(BM_CacheKey)->Arg(256)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
