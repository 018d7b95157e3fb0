#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "potforge/answer.hpp"
#include "potforge/config.hpp"
#include "potforge/gateway.hpp"
#include "potforge/phrases.hpp"
#include "potforge/scoring.hpp"

namespace potforge {

struct EvaluationSample {
  std::string question_id;
  std::string phrase_id;
  std::int64_t baseline_tokens = 1;
  std::int64_t attacked_tokens = 0;
  CanonicalAnswer baseline_answer;
  CanonicalAnswer attacked_answer;
  std::optional<CanonicalAnswer> ground_truth;

  double rti() const;
  bool operator==(const EvaluationSample&) const = default;
};

struct SampleFailure {
  std::string question_id;
  std::string reason;

  bool operator==(const SampleFailure&) const = default;
};

struct EvaluationReport {
  std::string dataset;
  std::string target_model;
  std::size_t n_samples = 0;
  double mean_rti = 0.0;  // mean of per-sample ratios
  double rti_std = 0.0;   // sample standard deviation of the ratios
  double ratio_of_means = 0.0;
  double mean_baseline_tokens = 0.0;
  double std_baseline_tokens = 0.0;
  double mean_attacked_tokens = 0.0;
  double std_attacked_tokens = 0.0;
  double hit_threshold = 1.2;
  double hit_rate = 0.0;
  std::optional<double> accuracy_attacked;  // vs ground truth, when every sample has it
  std::optional<double> accuracy_clean;
  double consistency_rate = 0.0;
  std::vector<EvaluationSample> per_sample;
  std::vector<SampleFailure> failures;

  bool operator==(const EvaluationReport&) const = default;
};

enum class AccuracyReference { kGroundTruth, kCleanOutput };

void to_json(nlohmann::json& j, const EvaluationSample& s);
void from_json(const nlohmann::json& j, EvaluationSample& s);
void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);

// attacked / baseline. Throws kInvalidArgument when baseline < 1.
double rti(std::int64_t attacked_tokens, std::int64_t baseline_tokens);

// Fraction of samples with rti >= threshold. Throws kEmptySampleSet.
double hit_rate(std::span<const EvaluationSample> samples, double threshold);

// Throws kMissingGroundTruth (ground-truth mode, any sample lacking it) or
// kEmptySampleSet.
double accuracy(std::span<const EvaluationSample> samples, AccuracyReference reference);

// Aggregates samples into a report (no model calls).
EvaluationReport summarize(std::string dataset, std::string target_model,
                           std::vector<EvaluationSample> samples, double hit_threshold,
                           std::vector<SampleFailure> failures = {});

// Recorded-trace replay: JSON Lines of EvaluationSample objects.
std::vector<EvaluationSample> load_trace(const std::filesystem::path& path);

// Runs baseline and attacked calls for every question and aggregates.
// Phrases must be in rank order; kBest uses phrases[0] everywhere,
// kRoundRobin cycles through them. Failed samples are counted, not dropped
// silently.
EvaluationReport evaluate_attack(std::span<const GuidingPhrase> phrases,
                                 std::span<const Question> dataset, const ModelEndpoint& target,
                                 Gateway& gateway, const RunConfig& cfg);

struct TransferTarget {
  std::string model;
  double mean_rti = 0.0;

  bool operator==(const TransferTarget&) const = default;
};

struct TransferReport {
  std::string source_model;
  std::optional<double> source_mean_rti;
  std::vector<TransferTarget> targets;
  std::vector<std::string> phrases_used;

  bool operator==(const TransferReport&) const = default;
};

void to_json(nlohmann::json& j, const TransferReport& r);
void from_json(const nlohmann::json& j, TransferReport& r);

// Evaluates frozen phrases on every target (and on the source, for the
// reference column). Throws kSourceMismatch when `declared_source` differs
// from the model the phrases were scored against.
TransferReport transfer_matrix(std::span<const GuidingPhrase> phrases,
                               const std::string& run_source_model,
                               const std::string& declared_source,
                               std::span<const ModelEndpoint> targets,
                               std::span<const Question> dataset, Gateway& gateway,
                               const RunConfig& cfg);

}  // namespace potforge
