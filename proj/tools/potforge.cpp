// potforge command-line entry point.
//
// Exit status: 0 success, 1 domain error, 2 usage error. Human-readable
// output goes to stderr; machine output only to files.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "potforge/config.hpp"
#include "potforge/error.hpp"
#include "potforge/evaluator.hpp"
#include "potforge/ledger.hpp"
#include "potforge/optimizer.hpp"
#include "potforge/report.hpp"
#include "potforge/seeds.hpp"

namespace fs = std::filesystem;
using namespace potforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

void setup_logging(int verbosity, const fs::path& log_file = {}) {
  std::vector<spdlog::sink_ptr> sinks{std::make_shared<spdlog::sinks::stderr_color_sink_mt>()};
  if (!log_file.empty()) {
    fs::create_directories(log_file.parent_path());
    sinks.push_back(std::make_shared<spdlog::sinks::basic_file_sink_mt>(log_file.string()));
  }
  auto logger = std::make_shared<spdlog::logger>("potforge", sinks.begin(), sinks.end());
  logger->set_level(verbosity > 0 ? spdlog::level::debug
                    : verbosity < 0 ? spdlog::level::warn
                                    : spdlog::level::info);
  spdlog::set_default_logger(logger);
}

GatewayOptions run_gateway_options(const fs::path& run_dir) {
  return GatewayOptions{run_dir / "cache", run_dir / "usage.jsonl"};
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Phrases deployed by evaluate/transfer, in rank order.
std::vector<GuidingPhrase> deployed_phrases(const RunLedger& ledger) {
  const auto run = ledger.read_summary();
  if (!run) {
    throw Error(ErrorCode::kIo, "run in " + ledger.dir().string() +
                                    " has not finished; complete it with `potforge resume`");
  }
  if (ledger.config().phrase_policy == PhrasePolicy::kBest) return {run->best.phrase};
  std::vector<GuidingPhrase> out;
  for (const auto& e : run->final_pool.entries) out.push_back(e.phrase);
  return out;
}

std::vector<Question> dataset_for(const RunLedger& ledger, const std::string& path, int limit) {
  fs::path p = path.empty() ? ledger.config().data.eval : fs::path(path);
  if (p.empty()) throw Error(ErrorCode::kConfigInvalid, "no dataset given and data.eval is unset");
  auto questions = load_questions(p);
  if (limit > 0 && questions.size() > static_cast<std::size_t>(limit)) questions.resize(static_cast<std::size_t>(limit));
  return questions;
}

int cmd_seed(const std::string& config_path, const std::string& out, int n) {
  RunConfig cfg = config_path.empty() ? default_run_config() : load_config(config_path);
  if (n > 0) cfg.n_seeds = n;
  std::vector<GuidingPhrase> phrases;
  if (!cfg.roles.generator.empty()) {
    auto gateway = make_gateway(cfg, {});
    SeedGenerationOptions opts;
    opts.min_seeds = cfg.min_seeds;
    opts.max_phrase_chars = cfg.max_phrase_chars;
    opts.temperature = cfg.temperature;
    opts.seed = static_cast<std::int64_t>(cfg.rng_seed);
    phrases = generate_seeds(*gateway, gateway->endpoint(cfg.roles.generator), cfg.seed_template,
                             cfg.n_seeds, opts);
  } else {
    if (cfg.data.seeds.empty()) {
      throw Error(ErrorCode::kConfigInvalid, "bind roles.generator or set data.seeds");
    }
    auto set = load_seed_set(cfg.data.seeds, cfg.max_phrase_chars);
    phrases = std::move(set.phrases);
    spdlog::info("{} valid phrases, {} rejected lines", phrases.size(), set.rejected.size());
  }
  write_seed_set(out, phrases);
  spdlog::info("wrote {} seed phrases to {}", phrases.size(), out);
  return kExitOk;
}

void log_run(const OptimizationRun& run) {
  spdlog::info("stopped: {} after {} rounds", to_string(run.stop_reason), run.rounds.size());
  spdlog::info("best score {:.3f} (mean inflation {:.3f}, consistency {:.2f}): {}",
               run.best.score(), run.best.breakdown.mean_inflation,
               run.best.breakdown.consistency_rate, run.best.phrase.text);
}

int cmd_optimize(const std::string& config_path, const std::string& out, int verbosity) {
  RunConfig cfg = load_config(config_path);
  auto ledger = RunLedger::create(out, cfg);
  setup_logging(verbosity, fs::path(out) / "run.log");
  auto gateway = make_gateway(cfg, run_gateway_options(out));
  const auto run = run_optimization(cfg, *gateway, ledger);
  log_run(run);
  return kExitOk;
}

int cmd_resume(const std::string& run_dir, const std::string& config_path, int verbosity) {
  auto ledger = RunLedger::open(run_dir);
  if (!config_path.empty() && config_digest(load_config(config_path)) != ledger.config_digest()) {
    throw Error(ErrorCode::kConfigDrift, "config differs from the snapshot in " + run_dir);
  }
  setup_logging(verbosity, fs::path(run_dir) / "run.log");
  const RunConfig cfg = ledger.config();
  auto gateway = make_gateway(cfg, run_gateway_options(run_dir));
  const auto run = run_optimization(cfg, *gateway, ledger);
  log_run(run);
  return kExitOk;
}

int cmd_evaluate(const std::string& run_dir, const std::string& dataset, const std::string& target,
                 int limit) {
  auto ledger = RunLedger::open(run_dir);
  const RunConfig& cfg = ledger.config();
  auto gateway = make_gateway(cfg, run_gateway_options(run_dir));
  if (!gateway->has_endpoint(target)) {
    throw Error(ErrorCode::kConfigInvalid, "unknown target endpoint '" + target + "'");
  }
  const auto phrases = deployed_phrases(ledger);
  const auto questions = dataset_for(ledger, dataset, limit);
  const auto report = evaluate_attack(phrases, questions, gateway->endpoint(target), *gateway, cfg);
  write_evaluation(run_dir, report);
  spdlog::info("{} on {}: n={} mean RTI {} (ratio of means {:.2f}), hit rate {:.2f}, {} failures",
               report.dataset, report.target_model, report.n_samples, format_rti(report.mean_rti),
               report.ratio_of_means, report.hit_rate, report.failures.size());
  return kExitOk;
}

int cmd_transfer(const std::string& run_dir, const std::string& targets_csv,
                 const std::string& dataset, const std::string& source, int limit) {
  auto ledger = RunLedger::open(run_dir);
  const RunConfig& cfg = ledger.config();
  auto gateway = make_gateway(cfg, run_gateway_options(run_dir));
  std::vector<ModelEndpoint> targets;
  for (const auto& id : split_csv(targets_csv)) {
    if (!gateway->has_endpoint(id)) {
      throw Error(ErrorCode::kConfigInvalid, "unknown target endpoint '" + id + "'");
    }
    targets.push_back(gateway->endpoint(id));
  }
  if (targets.empty()) throw Error(ErrorCode::kInvalidArgument, "no transfer targets given");
  const auto phrases = deployed_phrases(ledger);
  const auto questions = dataset_for(ledger, dataset, limit);
  const auto report = transfer_matrix(phrases, cfg.roles.scorer_target, source, targets, questions,
                                      *gateway, cfg);
  write_transfer(run_dir, report);
  if (report.source_mean_rti) {
    spdlog::info("source {}: {}", report.source_model, format_rti(*report.source_mean_rti));
  }
  for (const auto& t : report.targets) spdlog::info("target {}: {}", t.model, format_rti(t.mean_rti));
  return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& format) {
  for (const auto& p : emit_report(run_dir, report_format_from_string(format))) {
    spdlog::info("wrote {}", p.string());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reasoning-token inflation phrase search and evaluation"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag_function("-v,--verbose", [&](std::int64_t n) { verbosity = static_cast<int>(n); },
                        "Debug logging");
  app.add_flag_function("-q,--quiet", [&](std::int64_t) { verbosity = -1; }, "Warnings only");

  std::string config_path, out, run_dir, dataset, target, targets, source, format = "markdown";
  int n = 0;
  int limit = 0;

  auto* seed = app.add_subcommand("seed", "Build a seed phrase corpus");
  seed->add_option("--config", config_path, "Run config (TOML)")->check(CLI::ExistingFile);
  seed->add_option("--out", out, "Corpus file to write")->required();
  seed->add_option("-n,--count", n, "Number of phrases to request")->check(CLI::PositiveNumber);

  auto* optimize = app.add_subcommand("optimize", "Run the phrase optimization loop");
  optimize->add_option("--config", config_path, "Run config (TOML)")->required()->check(CLI::ExistingFile);
  optimize->add_option("--out", out, "Run directory")->required();

  auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
  resume->add_option("--run", run_dir, "Run directory")->required();
  resume->add_option("--config", config_path, "Refuse to resume unless this config matches")
      ->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "Measure the deployed phrase on a dataset");
  evaluate->add_option("--run", run_dir, "Run directory")->required();
  evaluate->add_option("--dataset", dataset, "Questions (JSON Lines); defaults to data.eval");
  evaluate->add_option("--target", target, "Target endpoint id")->required();
  evaluate->add_option("--limit", limit, "Evaluate only the first N questions");

  auto* transfer = app.add_subcommand("transfer", "Evaluate frozen phrases on other models");
  transfer->add_option("--run", run_dir, "Run directory")->required();
  transfer->add_option("--targets", targets, "Comma-separated endpoint ids")->required();
  transfer->add_option("--dataset", dataset, "Questions (JSON Lines); defaults to data.eval");
  transfer->add_option("--source", source, "Expected source endpoint of the run");
  transfer->add_option("--limit", limit, "Evaluate only the first N questions");

  auto* report = app.add_subcommand("report", "Render stored evaluations");
  report->add_option("--run", run_dir, "Run directory")->required();
  report->add_option("--format", format, "json, csv or markdown")
      ->check(CLI::IsMember({"json", "csv", "markdown", "markdown-summary"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  setup_logging(verbosity);
  try {
    if (*seed) return cmd_seed(config_path, out, n);
    if (*optimize) return cmd_optimize(config_path, out, verbosity);
    if (*resume) return cmd_resume(run_dir, config_path, verbosity);
    if (*evaluate) return cmd_evaluate(run_dir, dataset, target, limit);
    if (*transfer) return cmd_transfer(run_dir, targets, dataset, source, limit);
    if (*report) return cmd_report(run_dir, format);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitDomain;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}
