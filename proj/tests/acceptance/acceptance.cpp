// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criterion 8 talks to a real endpoint and only runs with --live.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "potforge/config.hpp"
#include "potforge/diversity.hpp"
#include "potforge/embedding.hpp"
#include "potforge/error.hpp"
#include "potforge/evaluator.hpp"
#include "potforge/ledger.hpp"
#include "potforge/optimizer.hpp"
#include "potforge/report.hpp"
#include "potforge/scoring.hpp"
#include "potforge/seeds.hpp"

using namespace potforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / fmt::format("potforge-accept-{}", rd());
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::map<std::string, std::string> ledger_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel.starts_with("cache/") || rel == "usage.jsonl" || rel == "run.log") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    out[rel] = buf.str();
  }
  return out;
}

// 1. Score arithmetic against an independent recomputation.
Outcome scoring_arithmetic() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> weight(0.0, 5.0);
  std::uniform_int_distribution<std::int64_t> tokens(1, 20000);
  std::uniform_int_distribution<int> count(1, 12);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double alpha = weight(rng);
    const double beta = weight(rng);
    std::vector<QuestionScore> qs;
    double inflation_sum = 0.0;
    int consistent = 0;
    for (int i = 0, n = count(rng); i < n; ++i) {
      QuestionScore q;
      q.question_id = fmt::format("q{}", i);
      q.baseline_tokens = tokens(rng);
      q.attacked_tokens = tokens(rng);
      q.inflation = static_cast<double>(q.attacked_tokens) / static_cast<double>(q.baseline_tokens);
      q.consistent = rng() % 2 == 0;
      inflation_sum += q.inflation;
      consistent += q.consistent ? 1 : 0;
      qs.push_back(q);
    }
    const double n = static_cast<double>(qs.size());
    const double expected = alpha * (inflation_sum / n) + beta * (consistent / n);
    const auto b = combine_scores("p", qs, alpha, beta);
    worst = std::max(worst, std::abs(b.score - expected));
  }
  const auto worked = combine_scores("p", {{"q", 600, 300, 2.0, true}}, 1.0, 1.0);
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-12 && worked.score == 3.0 && elapsed < 1.0,
          fmt::format("max |diff| {:.2e}, worked example {}, {:.3f}s", worst, worked.score, elapsed)};
}

std::vector<double> uniform_matrix(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = u(rng);
  }
  return d;
}

std::vector<std::string> ids_for(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("g{:02}", i));
  return ids;
}

// Brute-force maximum and how many k-subsets attain it.
std::pair<double, int> brute_force(const DissimilarityMatrix& m, std::size_t k) {
  const std::size_t n = m.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  double best = -1.0;
  int ties = 0;
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) s.push_back(i);
    }
    double v = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) {
      for (std::size_t b = a + 1; b < s.size(); ++b) v += m.at(s[a], s[b]);
    }
    if (v > best + 1e-9) {
      best = v;
      ties = 1;
    } else if (std::abs(v - best) <= 1e-9) {
      ++ties;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return {best, ties};
}

// k orthonormal axes plus strictly positive distractors: the axes are the
// unique optimum because every other pair has cosine > 0.
DissimilarityMatrix orthogonal_instance(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> pos(0.05, 1.0);
  std::vector<EmbeddingVector> vs;
  for (std::size_t i = 0; i < k; ++i) {
    EmbeddingVector e{std::vector<double>(k, 0.0)};
    e.values[i] = 1.0;
    vs.push_back(e);
  }
  while (vs.size() < n) {
    EmbeddingVector v{std::vector<double>(k)};
    for (auto& x : v.values) x = pos(rng);
    vs.push_back(v);
  }
  std::shuffle(vs.begin(), vs.end(), rng);
  return DissimilarityMatrix::from_embeddings(ids_for(n), vs);
}

// 2. Greedy dispersion against the exhaustive optimum.
Outcome dispersion_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  double worst_ratio = 1.0;
  int below_half = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 9;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(5, n);
    const DissimilarityMatrix m(ids_for(n), uniform_matrix(rng, n));
    const auto exact_ids = select_diverse_exact(m, k);
    const auto greedy_ids = select_diverse_greedy(m, k);
    const double best = brute_force(m, k).first;
    const double ex = dispersion(m, exact_ids);
    const double gr = dispersion(m, greedy_ids);
    if (std::abs(ex - best) > 1e-9) ++below_half;  // exact selector disagrees with brute force
    if (best > 0) {
      worst_ratio = std::min(worst_ratio, gr / best);
      if (gr < 0.5 * best) ++below_half;
    }
  }
  int unique = 0;
  int unique_mismatch = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + rng() % 4;
    const std::size_t n = k + 1 + rng() % (10 - k);
    const auto m = orthogonal_instance(rng, n, k);
    if (brute_force(m, k).second != 1) continue;
    ++unique;
    if (select_diverse_greedy(m, k) != select_diverse_exact(m, k)) ++unique_mismatch;
  }
  const double elapsed = seconds_since(t0);
  return {below_half == 0 && unique == 50 && unique_mismatch == 0 && elapsed < 30.0,
          fmt::format("worst greedy/exact {:.3f}, {} unique-optimum cases, {} mismatches, {:.2f}s",
                      worst_ratio, unique, unique_mismatch, elapsed)};
}

// 3. Mean pooling and cosine dissimilarity.
Outcome pooling_and_cosine() {
  using V = EmbeddingVector;
  bool ok = true;
  std::vector<V> two{V{{1, 0}}, V{{0, 1}}};
  ok &= mean_pool(two) == V{{0.5, 0.5}};
  std::vector<V> one{V{{0.25, -3, 7}}};
  ok &= mean_pool(one) == one[0];
  std::vector<V> opposite{V{{1, 0}}, V{{-1, 0}}};
  const V cancelled = mean_pool(opposite);
  ok &= cancelled == V{{0, 0}} && is_degenerate(cancelled);
  ok &= dissimilarity(V{{3, 4}}, V{{3, 4}}) == 0.0;
  ok &= dissimilarity(V{{1, 0}}, V{{0, 1}}) == 1.0;
  ok &= dissimilarity(V{{3, 4}}, V{{-3, -4}}) == 2.0;
  ok &= dissimilarity(cancelled, V{{1, 0}}) == 1.0;

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> c(0.0, 1e3);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    V a{std::vector<double>(16)}, b{std::vector<double>(16)};
    for (auto& x : a.values) x = g(rng);
    for (auto& x : b.values) x = g(rng);
    double scale = 0.0;
    while (scale <= 0.0) scale = c(rng);
    V scaled = a;
    for (auto& x : scaled.values) x *= scale;
    worst = std::max(worst, std::abs(dissimilarity(scaled, b) - dissimilarity(a, b)));
  }
  ok &= worst <= 1e-12;
  return {ok, fmt::format("identities {}, scale invariance max |diff| {:.2e}", ok ? "hold" : "broken", worst)};
}

RunConfig planted_config() {
  RunConfig cfg = default_run_config();
  cfg.rounds = 15;
  cfg.candidates_per_round = 10;
  cfg.k_init = 6;
  cfg.k_score = 8;
  cfg.q_train = 6;
  cfg.rng_seed = 7;
  return cfg;
}

std::vector<Question> train_questions(int n) {
  auto q = load_questions(POTFORGE_SOURCE_DIR "/data/sim_questions.jsonl");
  q.resize(std::min<std::size_t>(q.size(), static_cast<std::size_t>(n)));
  return q;
}

std::vector<GuidingPhrase> plain_seeds() {
  return load_seed_set(POTFORGE_TEST_DATA "/seeds_no_trigger.txt").phrases;
}

bool only_simulated(const RunConfig& cfg) {
  return std::all_of(cfg.endpoints.begin(), cfg.endpoints.end(),
                     [](const auto& e) { return !e.second.base_url.starts_with("http"); });
}

OptimizationRun run_planted(const RunConfig& cfg, const fs::path& dir, const OptimizerHooks& hooks = {}) {
  auto gateway = make_gateway(cfg, {dir / "cache", {}});
  auto ledger = RunLedger::create(dir, cfg);
  const auto seeds = plain_seeds();
  const auto train = train_questions(cfg.q_train);
  return run_optimization(cfg, *gateway, ledger, seeds, train, hooks);
}

// 4. The loop finds the planted triggers from trigger-free seeds.
Outcome planted_optimum() {
  const auto t0 = Clock::now();
  const RunConfig cfg = planted_config();
  const auto& profile = cfg.sim_profiles.at("default");
  bool seeds_clean = profile.noise_amplitude == 0 && profile.trigger_lexicon.size() == 6;
  for (const auto& s : plain_seeds()) {
    std::string lower = fold_case(s.text);
    for (const auto& t : profile.trigger_lexicon) seeds_clean &= lower.find(t.pattern) == std::string::npos;
  }
  ScratchDir scratch;
  std::vector<std::map<std::string, std::string>> ledgers;
  OptimizationRun run;
  for (int rep = 0; rep < 3; ++rep) {
    const fs::path dir = scratch.path() / fmt::format("rep{}", rep);
    run = run_planted(cfg, dir);
    ledgers.push_back(ledger_files(dir));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < run.best_by_round.size(); ++i) {
    monotone &= run.best_by_round[i] >= run.best_by_round[i - 1];
  }
  const bool identical = ledgers[0] == ledgers[1] && ledgers[1] == ledgers[2];
  const double inflation = run.best.breakdown.mean_inflation;
  const double elapsed = seconds_since(t0);
  return {seeds_clean && only_simulated(cfg) && inflation >= 3.0 && monotone && identical &&
              elapsed < 60.0,
          fmt::format("best mean inflation {:.2f} after {} rounds, monotone {}, repeats identical {}, "
                      "{:.1f}s for 3 runs",
                      inflation, run.rounds.size(), monotone, identical, elapsed)};
}

// 5. Metric recomputation on recorded traces and the hand-authored fixture.
Outcome metric_fixtures() {
  const auto trace = load_trace(POTFORGE_TEST_DATA "/trace_mathqa_shape.jsonl");
  const auto report = summarize("mathqa", "recorded", trace, 1.2);
  std::vector<EvaluationSample> rtis;
  for (auto [base, attacked] : {std::pair{100, 100}, {100, 130}, {100, 200}}) {
    EvaluationSample s;
    s.question_id = fmt::format("q{}", attacked);
    s.baseline_tokens = base;
    s.attacked_tokens = attacked;
    rtis.push_back(s);
  }
  const double hr = hit_rate(rtis, 1.2);
  const auto fixture = load_trace(POTFORGE_TEST_DATA "/accuracy_fixture.jsonl");
  const double gt = accuracy(fixture, AccuracyReference::kGroundTruth);
  const double clean = accuracy(fixture, AccuracyReference::kCleanOutput);
  const bool ok = std::abs(report.ratio_of_means - 8.40) <= 0.01 && hr == 2.0 / 3.0 && gt == 0.6 &&
                  clean == 0.7;
  return {ok, fmt::format("ratio of means {:.4f}, hit rate {:.6f}, accuracy gt {} / clean {}",
                          report.ratio_of_means, hr, gt, clean)};
}

// 6. Transfer to an identical and a disjoint trigger lexicon.
Outcome transfer_protocol() {
  RunConfig cfg = planted_config();
  SimTargetConfig disjoint = default_sim_target_config();
  disjoint.trigger_lexicon = {{"enumerate corner cases", 900}, {"cite a textbook", 500}};
  cfg.sim_profiles["twin"] = default_sim_target_config();
  cfg.sim_profiles["other"] = disjoint;
  for (const char* id : {"twin", "other"}) {
    ModelEndpoint ep;
    ep.id = id;
    ep.base_url = fmt::format("sim://{}", id);
    ep.model_name = fmt::format("sim/{}", id);
    cfg.endpoints[id] = ep;
  }
  ScratchDir scratch;
  const auto run = run_planted(cfg, scratch.path() / "run");
  auto gateway = make_gateway(cfg, {scratch.path() / "run" / "cache", {}});
  const std::vector<GuidingPhrase> frozen{run.best.phrase};
  const auto questions = load_questions(POTFORGE_SOURCE_DIR "/data/sim_questions.jsonl");
  const std::vector<ModelEndpoint> targets{gateway->endpoint("twin"), gateway->endpoint("other")};
  const auto report = transfer_matrix(frozen, "sim", "sim", targets, questions, *gateway, cfg);
  const double source = report.source_mean_rti.value_or(-1.0);
  const double twin = report.targets.at(0).mean_rti;
  const double other = report.targets.at(1).mean_rti;

  const TransferReport exceeds{"o1", 5.1, {{"deepseek-r1", 6.0}, {"gemini", 3.7}}, {"best"}};
  write_transfer(scratch.path(), exceeds);
  const bool round_trip = read_transfer(scratch.path()) == exceeds;
  const bool ok = std::abs(twin - source) <= 1e-9 && other <= 1.1 && round_trip;
  return {ok, fmt::format("source {:.4f}, identical {:.4f}, disjoint {:.4f}, schema round trip {}", source,
                          twin, other, round_trip)};
}

struct SimulatedKill {};

// 7. Kill after round k, resume, compare with an uninterrupted run.
Outcome replay_and_resume() {
  RunConfig cfg = planted_config();
  cfg.rounds = 8;
  cfg.epsilon = 0.0;
  ScratchDir scratch;
  run_planted(cfg, scratch.path() / "reference");
  const auto reference = ledger_files(scratch.path() / "reference");
  std::vector<std::string> failures;
  for (int k : {0, 3, 6}) {
    const fs::path dir = scratch.path() / fmt::format("killed{}", k);
    OptimizerHooks kill;
    kill.after_round = [k](const RoundRecord& r) {
      if (r.round == k) throw SimulatedKill{};
    };
    try {
      run_planted(cfg, dir, kill);
      failures.push_back(fmt::format("k={} not interrupted", k));
      continue;
    } catch (const SimulatedKill&) {
    }
    auto gateway = make_gateway(cfg, {dir / "cache", {}});
    auto ledger = RunLedger::open(dir);
    run_optimization(ledger.config(), *gateway, ledger);
    if (ledger_files(dir) != reference) failures.push_back(fmt::format("k={} differs", k));
  }
  return {failures.empty(),
          failures.empty() ? fmt::format("resumed after rounds 0, 3, 6: {} files byte-identical", reference.size())
                           : fmt::format("{}", fmt::join(failures, "; "))};
}

// 8. One seed phrase scored against a real endpoint.
Outcome live_smoke(const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  auto gateway = make_gateway(cfg, {});
  Scorer scorer(*gateway, cfg);
  const auto seeds = load_seed_set(POTFORGE_SOURCE_DIR "/data/seeds.txt").phrases;
  const auto questions = train_questions(1);
  const auto b = scorer.score(seeds.at(0), questions);
  const auto baseline = scorer.baselines().get(scorer.target(), questions.at(0));
  const bool ok = std::isfinite(b.mean_inflation) && !b.per_question.empty() && !baseline.answer.raw.empty();
  return {ok, fmt::format("{}: inflation {:.3f}, baseline answer '{}'", scorer.target().model_name,
                          b.mean_inflation, baseline.answer.canonical)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"potforge acceptance suite"};
  bool live = false;
  std::string live_config;
  app.add_flag("--live", live, "Also run the credential-gated live endpoint check");
  app.add_option("--live-config", live_config, "Config whose roles.scorer_target is a real endpoint")
      ->envname("POTFORGE_LIVE_CONFIG");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1 scoring arithmetic", scoring_arithmetic},
      {"AC2 dispersion oracle equivalence", dispersion_oracle},
      {"AC3 mean-pool and cosine identities", pooling_and_cosine},
      {"AC4 planted-optimum optimization", planted_optimum},
      {"AC5 metric fixtures", metric_fixtures},
      {"AC6 transferability protocol", transfer_protocol},
      {"AC7 replay and resume", replay_and_resume},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  if (!live || live_config.empty()) {
    std::cout << "SKIP AC8 live-API smoke: run with --live --live-config <toml> to enable" << std::endl;
  } else {
    Outcome o;
    try {
      o = live_smoke(live_config);
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << "AC8 live-API smoke: " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
