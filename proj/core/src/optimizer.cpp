#include "potforge/optimizer.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "potforge/digest.hpp"
#include "potforge/diversity.hpp"
#include "potforge/error.hpp"
#include "potforge/ledger.hpp"
#include "potforge/seeds.hpp"

namespace potforge {
namespace {

std::string join_prompt(std::string_view objective, std::string_view history,
                        std::string_view instructions) {
  std::string out(objective);
  out += "\n\n";
  out += history;
  out += "\n\n";
  out += instructions;
  return out;
}

std::int64_t round_seed(std::uint64_t rng_seed, int round) {
  return static_cast<std::int64_t>(splitmix64(rng_seed ^ splitmix64(static_cast<std::uint64_t>(round) + 1)) >> 1);
}

// Keeps valid, fresh phrases from a model response.
void collect(std::string_view response, int m, int round, std::size_t max_chars,
             const HistoryPool& pool, std::set<std::string>& seen,
             std::vector<GuidingPhrase>& out, std::size_t take_per_response) {
  std::size_t taken = 0;
  for (auto& text : split_phrase_list(response)) {
    if (out.size() >= static_cast<std::size_t>(m) || taken >= take_per_response) return;
    if (phrase_violation(text, max_chars)) continue;
    const std::string folded = fold_case(text);
    if (pool.contains_text(text) || !seen.insert(folded).second) continue;
    out.push_back({fmt::format("r{:02}-c{:02}", round, out.size() + 1), std::move(text),
                   PhraseOrigin::kOptimizerRound, round});
    ++taken;
  }
}

}  // namespace

std::string MetaPrompt::digest() const { return sha256_hex(rendered); }

MetaPrompt build_meta_prompt(std::string_view objective, const HistoryPool& pool,
                             std::string_view instructions) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "meta-prompt needs a nonempty pool");
  MetaPrompt meta;
  meta.objective_text = std::string(objective);
  meta.instruction_text = std::string(instructions);
  for (auto it = pool.entries.rbegin(); it != pool.entries.rend(); ++it) {
    if (!meta.history_block.empty()) meta.history_block += '\n';
    meta.history_block += fmt::format("{} → {:.2f}", it->phrase.text, it->score());
  }
  meta.rendered = join_prompt(meta.objective_text, meta.history_block, meta.instruction_text);
  return meta;
}

std::string render_instructions(std::string_view instructions_template, int m) {
  std::string out(instructions_template);
  const std::string value = std::to_string(m);
  for (auto pos = out.find("{m}"); pos != std::string::npos; pos = out.find("{m}", pos + value.size())) {
    out.replace(pos, 3, value);
  }
  return out;
}

CandidateBatch generate_candidates(Gateway& gateway, const ModelEndpoint& optimizer_model,
                                   const MetaPrompt& meta, int m, double temperature,
                                   std::int64_t round_seed, const HistoryPool& pool, int round,
                                   const CandidateOptions& options) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "candidate count must be >= 1");
  CandidateBatch batch;
  std::set<std::string> seen;
  bool any_call_failed = false;
  if (options.mode == CandidateMode::kBatched) {
    try {
      const auto record = gateway.complete(optimizer_model, meta.rendered, temperature, round_seed);
      collect(record.answer_text, m, round, options.max_phrase_chars, pool, seen, batch.phrases,
              static_cast<std::size_t>(m));
    } catch (const Error& e) {
      spdlog::warn("round {}: optimizer call failed: {}", round, e.what());
      any_call_failed = true;
    }
  } else {
    const std::string prompt = join_prompt(meta.objective_text, meta.history_block,
                                           render_instructions(options.instructions_template, 1));
    for (int i = 0; i < m; ++i) {
      try {
        const auto record = gateway.complete(optimizer_model, prompt, temperature, round_seed + i);
        collect(record.answer_text, m, round, options.max_phrase_chars, pool, seen, batch.phrases, 1);
      } catch (const Error& e) {
        spdlog::warn("round {}: optimizer call {} failed: {}", round, i, e.what());
        any_call_failed = true;
      }
    }
  }
  batch.degraded = batch.phrases.empty();
  if (batch.degraded) {
    spdlog::warn("round {}: no usable candidates{}", round,
                 any_call_failed ? " (optimizer unavailable)" : "");
  }
  return batch;
}

bool check_convergence(std::span<const double> best_by_round, double epsilon, int patience) {
  if (patience < 1 || best_by_round.size() < static_cast<std::size_t>(patience) + 1) return false;
  double running = best_by_round.front();
  std::vector<double> gains;
  for (std::size_t i = 1; i < best_by_round.size(); ++i) {
    const double next = std::max(running, best_by_round[i]);
    gains.push_back(next - running);
    running = next;
  }
  return std::all_of(gains.end() - patience, gains.end(), [&](double g) { return g < epsilon; });
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kMaxRounds: return "max_rounds";
    case StopReason::kConverged: return "converged";
    case StopReason::kAborted: return "aborted";
  }
  return "max_rounds";
}

StopReason stop_reason_from_string(std::string_view s) {
  if (s == "max_rounds") return StopReason::kMaxRounds;
  if (s == "converged") return StopReason::kConverged;
  if (s == "aborted") return StopReason::kAborted;
  throw Error(ErrorCode::kInvalidArgument, "unknown stop reason '" + std::string(s) + "'");
}

HistoryPool diversity_filter(Gateway& gateway, const ModelEndpoint& embedder,
                             const HistoryPool& merged, int k_init, DiversitySelector selector,
                             int exact_limit, std::vector<std::string>* evicted) {
  if (k_init < 1) throw Error(ErrorCode::kInvalidArgument, "k_init must be >= 1");
  const std::size_t k = static_cast<std::size_t>(k_init);
  if (merged.size() <= k) return merged;

  std::vector<std::string> ids;
  std::vector<EmbeddingVector> embeddings;
  for (const auto& e : merged.entries) {
    ids.push_back(e.phrase.id);
    embeddings.push_back(gateway.embed(embedder, e.phrase.text));
  }
  const auto matrix = DissimilarityMatrix::from_embeddings(ids, embeddings);
  if (!matrix.degenerate_pairs().empty()) {
    spdlog::warn("{} phrase pairs have degenerate embeddings", matrix.degenerate_pairs().size());
  }
  std::vector<std::string> keep;
  if (selector == DiversitySelector::kExact && merged.size() <= static_cast<std::size_t>(exact_limit)) {
    keep = select_diverse_exact(matrix, k, exact_limit);
  } else {
    if (selector == DiversitySelector::kExact) {
      spdlog::warn("{} entries exceed exact_limit {}; using greedy selection", merged.size(),
                   exact_limit);
    }
    keep = select_diverse_greedy(matrix, k);
  }

  const std::set<std::string> kept(keep.begin(), keep.end());
  HistoryPool out{{}, merged.round};
  for (const auto& e : merged.entries) {
    if (kept.contains(e.phrase.id)) {
      out.entries.push_back(e);
    } else if (evicted) {
      evicted->push_back(e.phrase.id);
    }
  }
  return out;
}

OptimizationRun run_optimization(const RunConfig& cfg, Gateway& gateway, RunLedger& ledger,
                                 const OptimizerHooks& hooks) {
  if (ledger.has_inputs()) {
    const auto seeds = ledger.read_seeds();
    const auto train = ledger.read_train();
    return run_optimization(cfg, gateway, ledger, seeds, train, hooks);
  }

  std::vector<GuidingPhrase> seeds;
  if (!cfg.roles.generator.empty()) {
    SeedGenerationOptions opts;
    opts.min_seeds = cfg.min_seeds;
    opts.max_phrase_chars = cfg.max_phrase_chars;
    opts.temperature = cfg.temperature;
    opts.seed = static_cast<std::int64_t>(cfg.rng_seed);
    seeds = generate_seeds(gateway, gateway.endpoint(cfg.roles.generator), cfg.seed_template,
                           cfg.n_seeds, opts);
  } else {
    if (cfg.data.seeds.empty()) {
      throw Error(ErrorCode::kConfigInvalid, "no seed corpus configured and no generator bound");
    }
    seeds = load_seed_set(cfg.data.seeds, cfg.max_phrase_chars).phrases;
    if (seeds.size() > static_cast<std::size_t>(cfg.n_seeds)) seeds.resize(static_cast<std::size_t>(cfg.n_seeds));
  }
  if (cfg.data.train.empty()) throw Error(ErrorCode::kConfigInvalid, "no training questions configured");
  auto train = load_questions(cfg.data.train);
  if (train.size() > static_cast<std::size_t>(cfg.q_train)) train.resize(static_cast<std::size_t>(cfg.q_train));
  return run_optimization(cfg, gateway, ledger, seeds, train, hooks);
}

OptimizationRun run_optimization(const RunConfig& cfg, Gateway& gateway, RunLedger& ledger,
                                 std::span<const GuidingPhrase> seeds,
                                 std::span<const Question> train, const OptimizerHooks& hooks) {
  try {
    if (!ledger.has_inputs()) ledger.write_inputs(seeds, train);
    if (auto done = ledger.read_summary()) return *done;

    Scorer scorer(gateway, cfg);
    const ModelEndpoint& optimizer_model = gateway.endpoint(cfg.roles.optimizer);
    const ModelEndpoint& embedder = gateway.endpoint(cfg.roles.embedder);

    ResumeState state;
    if (ledger.has_initial_pool()) {
      state = resume_run(ledger.dir(), cfg);
      spdlog::info("resuming at round {}", state.next_round);
    } else {
      auto init = build_initial_pool(seeds, train, scorer, cfg.k_init);
      if (init.pool.empty()) {
        throw Error(ErrorCode::kAbortedRun, "every seed failed to score; nothing to optimize");
      }
      state.config = cfg;
      state.initial_pool = init.pool;
      state.pool = init.pool;
      state.best = init.pool.entries.front();
      state.best_by_round = {state.best.score()};
      for (const auto& s : init.scored) state.memo.try_emplace(fold_case(s.phrase.text), s);
      ledger.persist_initial_pool(init.pool, init.scored, init.excluded, state.best_by_round,
                                  state.best);
    }

    CandidateOptions copts;
    copts.mode = cfg.candidate_mode;
    copts.max_phrase_chars = cfg.max_phrase_chars;
    copts.instructions_template = cfg.instructions;
    copts.objective = cfg.objective;

    OptimizationRun run;
    run.config_snapshot = cfg;
    run.initial_pool = state.initial_pool;
    run.rounds = state.rounds;
    run.stop_reason = StopReason::kMaxRounds;

    for (int r = state.next_round; r < cfg.rounds; ++r) {
      if (check_convergence(state.best_by_round, cfg.epsilon, cfg.patience)) {
        run.stop_reason = StopReason::kConverged;
        break;
      }
      RoundRecord rec;
      rec.round = r;
      rec.meta_prompt = build_meta_prompt(cfg.objective, state.pool,
                                          render_instructions(cfg.instructions, cfg.candidates_per_round));
      auto batch = generate_candidates(gateway, optimizer_model, rec.meta_prompt,
                                       cfg.candidates_per_round, cfg.temperature,
                                       round_seed(cfg.rng_seed, r), state.pool, r, copts);
      rec.candidates = batch.phrases;
      rec.degraded = batch.degraded;

      std::vector<ScoredPhrase> merge_in;
      for (const auto& cand : rec.candidates) {
        const std::string key = fold_case(cand.text);
        if (auto it = state.memo.find(key); it != state.memo.end()) {
          rec.memo_hits.push_back(cand.id);
          merge_in.push_back(it->second);
          continue;
        }
        try {
          ScoredPhrase s{cand, scorer.score(cand, train)};
          rec.scored.push_back(s);
          merge_in.push_back(s);
          state.memo.try_emplace(key, std::move(s));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kAllQuestionsFailed) throw;
          spdlog::warn("round {}: {} could not be scored: {}", r, cand.id, e.what());
          rec.score_failures.push_back(cand.id);
        }
      }

      rec.merged = update_pool(state.pool, merge_in, cfg.k_score);
      rec.pool_after = diversity_filter(gateway, embedder, rec.merged, cfg.k_init,
                                        cfg.diversity_selector, cfg.exact_limit, &rec.evicted);
      for (const auto& s : rec.scored) {
        if (ranks_before(s, state.best)) state.best = s;
      }
      state.best_by_round.push_back(state.best.score());
      rec.best_by_round = state.best_by_round;
      rec.best = state.best;

      ledger.persist_round(rec);
      run.rounds.push_back({r, rec.meta_prompt.digest(), rec.candidates, rec.pool_after});
      state.pool = rec.pool_after;
      spdlog::info("round {}: {} candidates, {} scored, best {:.2f}", r, rec.candidates.size(),
                   rec.scored.size(), state.best.score());
      if (hooks.after_round) hooks.after_round(rec);
    }

    run.best = state.best;
    run.best_by_round = state.best_by_round;
    run.final_pool = state.pool;
    ledger.write_summary(run);
    return run;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo || e.code() == ErrorCode::kCorruptLedger) {
      throw Error(ErrorCode::kAbortedRun, e.what());
    }
    throw;
  }
}

}  // namespace potforge
