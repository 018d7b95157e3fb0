#include "potforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "potforge/error.hpp"
#include "potforge/ledger.hpp"

namespace potforge {
namespace {

namespace fs = std::filesystem;

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Directory-safe form of an id: anything outside [A-Za-z0-9._-] becomes '_'.
std::string path_component(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string percent(double v) { return fmt::format("{:.0f}%", v * 100.0); }

std::string tokens_cell(double mean, double std) { return fmt::format("{:.0f} ± {:.0f}", mean, std); }

}  // namespace

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "markdown-summary" || s == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + std::string(s) + "'");
}

std::string format_rti(double value) { return fmt::format("{:.1f}×", value); }

std::string render_csv(const EvaluationReport& report) {
  std::string out = "question_id,phrase_id,baseline_tokens,attacked_tokens,rti,hit,consistent,correct\n";
  for (const auto& s : report.per_sample) {
    const double r = s.rti();
    std::string correct;
    if (s.ground_truth) correct = answers_match(s.attacked_answer, *s.ground_truth) ? "true" : "false";
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(s.question_id), csv_field(s.phrase_id),
                       s.baseline_tokens, s.attacked_tokens, r,
                       r >= report.hit_threshold ? "true" : "false",
                       answers_match(s.attacked_answer, s.baseline_answer) ? "true" : "false", correct);
  }
  return out;
}

std::string render_json(const EvaluationReport& report) {
  return nlohmann::json(report).dump(2) + "\n";
}

std::string render_markdown_summary(std::span<const EvaluationReport> reports,
                                    const std::optional<TransferReport>& transfer) {
  std::string out =
      "| Model | Dataset | Setting | Reasoning tokens | RTI | Hit rate | Accuracy |\n"
      "|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const std::string clean_acc = r.accuracy_clean ? percent(*r.accuracy_clean) : "n/a";
    const std::string attack_acc = r.accuracy_attacked ? percent(*r.accuracy_attacked) : "n/a";
    out += fmt::format("| {} | {} | No attack | {} | {} | - | {} |\n", r.target_model, r.dataset,
                       tokens_cell(r.mean_baseline_tokens, r.std_baseline_tokens), format_rti(1.0),
                       clean_acc);
    out += fmt::format("| {} | {} | Attack | {} | {} | {} | {} |\n", r.target_model, r.dataset,
                       tokens_cell(r.mean_attacked_tokens, r.std_attacked_tokens),
                       format_rti(r.mean_rti), percent(r.hit_rate), attack_acc);
  }
  if (transfer) {
    out += "\n| Source | Target | RTI |\n|---|---|---|\n";
    if (transfer->source_mean_rti) {
      out += fmt::format("| {} | {} (source) | {} |\n", transfer->source_model,
                         transfer->source_model, format_rti(*transfer->source_mean_rti));
    }
    for (const auto& t : transfer->targets) {
      out += fmt::format("| {} | {} | {} |\n", transfer->source_model, t.model, format_rti(t.mean_rti));
    }
  }
  return out;
}

fs::path evaluation_dir(const fs::path& run_dir, const std::string& target,
                        const std::string& dataset) {
  return run_dir / "eval" / path_component(target) / path_component(dataset);
}

void write_evaluation(const fs::path& run_dir, const EvaluationReport& report) {
  const fs::path dir = evaluation_dir(run_dir, report.target_model, report.dataset);
  write_text_atomic(dir / "report.json", render_json(report));
  write_text_atomic(dir / "report.csv", render_csv(report));
}

std::vector<EvaluationReport> read_evaluations(const fs::path& run_dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  const fs::path root = run_dir / "eval";
  if (fs::exists(root)) {
    for (const auto& e : fs::recursive_directory_iterator(root, ec)) {
      if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<EvaluationReport> out;
  for (const auto& f : files) {
    try {
      out.push_back(nlohmann::json::parse(read_file(f)).get<EvaluationReport>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptLedger, f.string() + ": " + e.what());
    }
  }
  return out;
}

void write_transfer(const fs::path& run_dir, const TransferReport& report) {
  write_text_atomic(run_dir / "transfer.json", nlohmann::json(report).dump(2) + "\n");
}

std::optional<TransferReport> read_transfer(const fs::path& run_dir) {
  const fs::path path = run_dir / "transfer.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    return nlohmann::json::parse(read_file(path)).get<TransferReport>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptLedger, path.string() + ": " + e.what());
  }
}

std::vector<fs::path> emit_report(const fs::path& run_dir, ReportFormat format) {
  const auto reports = read_evaluations(run_dir);
  const auto transfer = read_transfer(run_dir);
  if (reports.empty() && !transfer) {
    throw Error(ErrorCode::kNothingToReport,
                "no evaluations in " + run_dir.string() + "; run `potforge evaluate` first");
  }
  std::vector<fs::path> written;
  switch (format) {
    case ReportFormat::kJson:
      for (const auto& r : reports) {
        const fs::path p = evaluation_dir(run_dir, r.target_model, r.dataset) / "report.json";
        write_text_atomic(p, render_json(r));
        written.push_back(p);
      }
      if (transfer) written.push_back(run_dir / "transfer.json");
      break;
    case ReportFormat::kCsv:
      for (const auto& r : reports) {
        const fs::path p = evaluation_dir(run_dir, r.target_model, r.dataset) / "report.csv";
        write_text_atomic(p, render_csv(r));
        written.push_back(p);
      }
      break;
    case ReportFormat::kMarkdown: {
      const fs::path p = run_dir / "report.md";
      write_text_atomic(p, render_markdown_summary(reports, transfer));
      written.push_back(p);
      break;
    }
  }
  return written;
}

}  // namespace potforge
