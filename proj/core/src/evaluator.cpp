#include "potforge/evaluator.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <variant>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "potforge/assembler.hpp"
#include "potforge/error.hpp"
#include "potforge/parallel.hpp"

namespace potforge {
namespace {

using nlohmann::json;

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

CanonicalAnswer answer_from_json(const json& j) {
  if (j.is_string()) return canonicalize_answer(j.get<std::string>());
  if (j.is_number()) return canonicalize_answer(j.dump());
  return j.get<CanonicalAnswer>();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

CanonicalAnswer extract_or_empty(const std::string& text) {
  try {
    return extract_answer(text);
  } catch (const Error&) {
    return {};
  }
}

}  // namespace

double EvaluationSample::rti() const { return potforge::rti(attacked_tokens, baseline_tokens); }

void to_json(json& j, const EvaluationSample& s) {
  j = json{{"question_id", s.question_id},
           {"phrase_id", s.phrase_id},
           {"baseline_tokens", s.baseline_tokens},
           {"attacked_tokens", s.attacked_tokens},
           {"rti", s.rti()},
           {"baseline_answer", s.baseline_answer},
           {"attacked_answer", s.attacked_answer},
           {"ground_truth", s.ground_truth ? json(*s.ground_truth) : json(nullptr)}};
}

void from_json(const json& j, EvaluationSample& s) {
  s.question_id = j.at("question_id").get<std::string>();
  s.phrase_id = j.value("phrase_id", std::string{});
  s.baseline_tokens = j.at("baseline_tokens").get<std::int64_t>();
  s.attacked_tokens = j.at("attacked_tokens").get<std::int64_t>();
  s.baseline_answer = j.contains("baseline_answer") ? answer_from_json(j.at("baseline_answer"))
                                                    : CanonicalAnswer{};
  s.attacked_answer = j.contains("attacked_answer") ? answer_from_json(j.at("attacked_answer"))
                                                    : CanonicalAnswer{};
  s.ground_truth.reset();
  if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
    s.ground_truth = answer_from_json(j.at("ground_truth"));
  }
  if (s.baseline_tokens < 1 || s.attacked_tokens < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample " + s.question_id + " has invalid token counts");
  }
}

void to_json(json& j, const EvaluationReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"question_id", f.question_id}, {"reason", f.reason}});
  j = json{{"dataset", r.dataset},
           {"target_model", r.target_model},
           {"n_samples", r.n_samples},
           {"mean_rti", r.mean_rti},
           {"rti_std", r.rti_std},
           {"ratio_of_means", r.ratio_of_means},
           {"mean_baseline_tokens", r.mean_baseline_tokens},
           {"std_baseline_tokens", r.std_baseline_tokens},
           {"mean_attacked_tokens", r.mean_attacked_tokens},
           {"std_attacked_tokens", r.std_attacked_tokens},
           {"hit_threshold", r.hit_threshold},
           {"hit_rate", r.hit_rate},
           {"accuracy_attacked", optional_json(r.accuracy_attacked)},
           {"accuracy_clean", optional_json(r.accuracy_clean)},
           {"consistency_rate", r.consistency_rate},
           {"n_failures", r.failures.size()},
           {"failures", failures},
           {"per_sample", r.per_sample}};
}

void from_json(const json& j, EvaluationReport& r) {
  r.dataset = j.at("dataset").get<std::string>();
  r.target_model = j.at("target_model").get<std::string>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.mean_rti = j.at("mean_rti").get<double>();
  r.rti_std = j.at("rti_std").get<double>();
  r.ratio_of_means = j.at("ratio_of_means").get<double>();
  r.mean_baseline_tokens = j.at("mean_baseline_tokens").get<double>();
  r.std_baseline_tokens = j.at("std_baseline_tokens").get<double>();
  r.mean_attacked_tokens = j.at("mean_attacked_tokens").get<double>();
  r.std_attacked_tokens = j.at("std_attacked_tokens").get<double>();
  r.hit_threshold = j.at("hit_threshold").get<double>();
  r.hit_rate = j.at("hit_rate").get<double>();
  r.accuracy_attacked = optional_double(j, "accuracy_attacked");
  r.accuracy_clean = optional_double(j, "accuracy_clean");
  r.consistency_rate = j.at("consistency_rate").get<double>();
  r.failures.clear();
  for (const auto& f : j.value("failures", json::array())) {
    r.failures.push_back({f.at("question_id").get<std::string>(), f.at("reason").get<std::string>()});
  }
  r.per_sample = j.at("per_sample").get<std::vector<EvaluationSample>>();
}

double rti(std::int64_t attacked_tokens, std::int64_t baseline_tokens) {
  if (baseline_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("baseline of {} tokens; must be >= 1", baseline_tokens));
  }
  return static_cast<double>(attacked_tokens) / static_cast<double>(baseline_tokens);
}

double hit_rate(std::span<const EvaluationSample> samples, double threshold) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySampleSet, "hit rate over no samples");
  if (!(threshold > 0)) throw Error(ErrorCode::kInvalidArgument, "hit threshold must be > 0");
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (s.rti() >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double accuracy(std::span<const EvaluationSample> samples, AccuracyReference reference) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySampleSet, "accuracy over no samples");
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (reference == AccuracyReference::kGroundTruth) {
      if (!s.ground_truth) {
        throw Error(ErrorCode::kMissingGroundTruth, "sample " + s.question_id + " has no ground truth");
      }
      if (answers_match(s.attacked_answer, *s.ground_truth)) ++correct;
    } else if (answers_match(s.attacked_answer, s.baseline_answer)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

EvaluationReport summarize(std::string dataset, std::string target_model,
                           std::vector<EvaluationSample> samples, double hit_threshold,
                           std::vector<SampleFailure> failures) {
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptySampleSet,
                fmt::format("no successful samples for {} on {} ({} failed)", dataset,
                            target_model, failures.size()));
  }
  EvaluationReport r;
  r.dataset = std::move(dataset);
  r.target_model = std::move(target_model);
  r.n_samples = samples.size();
  r.hit_threshold = hit_threshold;

  std::vector<double> ratios;
  std::vector<double> baseline;
  std::vector<double> attacked;
  for (const auto& s : samples) {
    ratios.push_back(s.rti());
    baseline.push_back(static_cast<double>(s.baseline_tokens));
    attacked.push_back(static_cast<double>(s.attacked_tokens));
  }
  r.mean_rti = mean(ratios);
  r.rti_std = sample_std(ratios);
  r.mean_baseline_tokens = mean(baseline);
  r.std_baseline_tokens = sample_std(baseline);
  r.mean_attacked_tokens = mean(attacked);
  r.std_attacked_tokens = sample_std(attacked);
  r.ratio_of_means = r.mean_attacked_tokens / r.mean_baseline_tokens;
  r.hit_rate = hit_rate(samples, hit_threshold);
  r.consistency_rate = accuracy(samples, AccuracyReference::kCleanOutput);

  const bool all_truth = std::all_of(samples.begin(), samples.end(),
                                     [](const EvaluationSample& s) { return s.ground_truth.has_value(); });
  if (all_truth) {
    r.accuracy_attacked = accuracy(samples, AccuracyReference::kGroundTruth);
    std::size_t clean_correct = 0;
    for (const auto& s : samples) {
      if (answers_match(s.baseline_answer, *s.ground_truth)) ++clean_correct;
    }
    r.accuracy_clean = static_cast<double>(clean_correct) / static_cast<double>(samples.size());
  }
  r.per_sample = std::move(samples);
  r.failures = std::move(failures);
  return r;
}

std::vector<EvaluationSample> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read trace " + path.string());
  std::vector<EvaluationSample> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<EvaluationSample>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIo, fmt::format("{}:{}: {}", path.string(), number, e.what()));
    }
  }
  return out;
}

EvaluationReport evaluate_attack(std::span<const GuidingPhrase> phrases,
                                 std::span<const Question> dataset, const ModelEndpoint& target,
                                 Gateway& gateway, const RunConfig& cfg) {
  if (phrases.empty()) throw Error(ErrorCode::kInvalidArgument, "no phrases to evaluate");
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "empty evaluation dataset");

  const std::int64_t seed = scoring_seed(cfg);
  BaselineStore baselines(gateway, seed);
  const AssemblyStrategy strategy = effective_strategy(cfg);
  std::optional<ModelEndpoint> llm;
  if (strategy == AssemblyStrategy::kLlm) llm = gateway.endpoint(cfg.roles.assembler);
  Assembler assembler(gateway, llm, strategy, cfg.overhead_chars, seed);

  using Outcome = std::variant<EvaluationSample, SampleFailure>;
  auto outcomes = parallel_map(dataset.size(), cfg.workers, [&](std::size_t i) -> Outcome {
    const Question& q = dataset[i];
    const GuidingPhrase& phrase =
        cfg.phrase_policy == PhrasePolicy::kRoundRobin ? phrases[i % phrases.size()] : phrases[0];
    try {
      const Baseline base = baselines.get(target, q);
      const AssembledPrompt prompt = assembler(phrase, q);
      const auto record = gateway.complete(target, prompt.text, 0.0, seed);
      EvaluationSample s;
      s.question_id = q.id;
      s.phrase_id = phrase.id;
      s.baseline_tokens = base.tokens;
      s.attacked_tokens = std::max<std::int64_t>(record.reasoning_tokens, 0);
      s.baseline_answer = base.answer;
      s.attacked_answer = extract_or_empty(record.answer_text);
      s.ground_truth = q.ground_truth;
      return s;
    } catch (const Error& e) {
      spdlog::warn("evaluation of {} on {} failed: {}", q.id, target.id, e.what());
      return SampleFailure{q.id, e.what()};
    }
  });

  std::vector<EvaluationSample> samples;
  std::vector<SampleFailure> failures;
  for (auto& o : outcomes) {
    if (auto* s = std::get_if<EvaluationSample>(&o)) {
      samples.push_back(std::move(*s));
    } else {
      failures.push_back(std::get<SampleFailure>(std::move(o)));
    }
  }
  const std::string tag = dataset.front().dataset;
  return summarize(tag, target.id, std::move(samples), cfg.hit_threshold, std::move(failures));
}

void to_json(json& j, const TransferReport& r) {
  json targets = json::array();
  for (const auto& t : r.targets) targets.push_back({{"model", t.model}, {"mean_rti", t.mean_rti}});
  j = json{{"source_model", r.source_model},
           {"source_mean_rti", optional_json(r.source_mean_rti)},
           {"targets", targets},
           {"phrases_used", r.phrases_used}};
}

void from_json(const json& j, TransferReport& r) {
  r.source_model = j.at("source_model").get<std::string>();
  r.source_mean_rti = optional_double(j, "source_mean_rti");
  r.targets.clear();
  for (const auto& t : j.at("targets")) {
    r.targets.push_back({t.at("model").get<std::string>(), t.at("mean_rti").get<double>()});
  }
  r.phrases_used = j.at("phrases_used").get<std::vector<std::string>>();
}

TransferReport transfer_matrix(std::span<const GuidingPhrase> phrases,
                               const std::string& run_source_model,
                               const std::string& declared_source,
                               std::span<const ModelEndpoint> targets,
                               std::span<const Question> dataset, Gateway& gateway,
                               const RunConfig& cfg) {
  if (!declared_source.empty() && declared_source != run_source_model) {
    throw Error(ErrorCode::kSourceMismatch,
                fmt::format("phrases were scored on '{}', not '{}'", run_source_model,
                            declared_source));
  }
  if (phrases.empty()) throw Error(ErrorCode::kInvalidArgument, "no phrases to transfer");

  TransferReport report;
  report.source_model = run_source_model;
  if (cfg.phrase_policy == PhrasePolicy::kRoundRobin) {
    for (const auto& p : phrases) report.phrases_used.push_back(p.id);
  } else {
    report.phrases_used.push_back(phrases.front().id);
  }
  if (gateway.has_endpoint(run_source_model)) {
    report.source_mean_rti =
        evaluate_attack(phrases, dataset, gateway.endpoint(run_source_model), gateway, cfg).mean_rti;
  }
  for (const auto& t : targets) {
    report.targets.push_back({t.id, evaluate_attack(phrases, dataset, t, gateway, cfg).mean_rti});
  }
  return report;
}

}  // namespace potforge
