#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "potforge/evaluator.hpp"

namespace potforge {

enum class ReportFormat { kJson, kCsv, kMarkdown };
ReportFormat report_format_from_string(std::string_view s);

// question_id,phrase_id,baseline_tokens,attacked_tokens,rti,hit,consistent,correct
std::string render_csv(const EvaluationReport& report);
std::string render_json(const EvaluationReport& report);

// Table with a "No attack" and an "Attack" row per evaluation:
// mean tokens ± std and RTI to one decimal with a "×" suffix. A transfer
// table follows when `transfer` is given.
std::string render_markdown_summary(std::span<const EvaluationReport> reports,
                                    const std::optional<TransferReport>& transfer = std::nullopt);

// <run>/transfer.json
void write_transfer(const std::filesystem::path& run_dir, const TransferReport& report);
std::optional<TransferReport> read_transfer(const std::filesystem::path& run_dir);

// "8.4×"
std::string format_rti(double value);

// Evaluations live under <run>/eval/<target>/<dataset>/ as report.json and
// report.csv.
std::filesystem::path evaluation_dir(const std::filesystem::path& run_dir,
                                     const std::string& target, const std::string& dataset);
void write_evaluation(const std::filesystem::path& run_dir, const EvaluationReport& report);
std::vector<EvaluationReport> read_evaluations(const std::filesystem::path& run_dir);

// Re-emits stored evaluations in the requested format; returns the files
// written. Throws kNothingToReport when the run has no evaluation.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& run_dir,
                                               ReportFormat format);

}  // namespace potforge
