#include "potforge/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "potforge/error.hpp"

namespace potforge {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path round_path(const fs::path& dir, int r) {
  return dir / "rounds" / fmt::format("round_{}.jsonl", r);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Parses JSON Lines. A final line that does not parse is taken to be a
// torn write and dropped; bad lines elsewhere are corruption.
std::vector<json> read_jsonl(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  std::vector<json> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(lines[i]));
    } catch (const json::parse_error&) {
      if (i + 1 == lines.size()) {
        spdlog::warn("{}: dropping truncated final line", path.string());
        break;
      }
      throw Error(ErrorCode::kCorruptLedger, fmt::format("{}:{} does not parse", path.string(), i + 1));
    }
  }
  return out;
}

json snapshot_event(int round, const HistoryPool& pool, const ScoredPhrase& best,
                    std::span<const double> best_by_round, bool degraded) {
  return json{{"event", "pool_snapshot"},
              {"round", round},
              {"pool", pool},
              {"best", best},
              {"best_by_round", std::vector<double>(best_by_round.begin(), best_by_round.end())},
              {"degraded", degraded}};
}

json summary_json(const RoundSummary& s) {
  return json{{"round", s.round},
              {"meta_prompt_digest", s.meta_prompt_digest},
              {"candidates", s.candidates},
              {"pool_after", s.pool_after}};
}

RoundSummary summary_from_json(const json& j) {
  return {j.at("round").get<int>(), j.at("meta_prompt_digest").get<std::string>(),
          j.at("candidates").get<std::vector<GuidingPhrase>>(),
          j.at("pool_after").get<HistoryPool>()};
}

}  // namespace

void write_text_atomic(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename into " + path.string() + ": " + ec.message());
}

void write_jsonl_atomic(const fs::path& path, std::span<const json> lines) {
  std::string text;
  for (const auto& l : lines) {
    text += l.dump();
    text += '\n';
  }
  write_text_atomic(path, text);
}

RunLedger RunLedger::create(const fs::path& dir, const RunConfig& cfg) {
  const std::string digest = potforge::config_digest(cfg);
  const fs::path snapshot = dir / "config.json";
  if (fs::exists(snapshot)) {
    const json existing = json::parse(read_file(snapshot));
    if (existing.at("digest").get<std::string>() != digest) {
      throw Error(ErrorCode::kConfigDrift,
                  dir.string() + " holds a run with a different config; use a new --out directory");
    }
  } else {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
    const json j{{"digest", digest}, {"config", cfg}};
    write_text_atomic(snapshot, j.dump(2) + "\n");
  }
  std::error_code ec;
  fs::create_directories(dir / "rounds", ec);
  fs::create_directories(dir / "cache", ec);
  RunConfig stored = cfg;
  stored.output_dir = dir;
  return RunLedger(dir, std::move(stored), digest);
}

RunLedger RunLedger::open(const fs::path& dir) {
  const fs::path snapshot = dir / "config.json";
  if (!fs::exists(snapshot)) {
    throw Error(ErrorCode::kIo, "no run found in " + dir.string() +
                                    "; start one with `potforge optimize --config <file> --out " +
                                    dir.string() + "`");
  }
  json j;
  try {
    j = json::parse(read_file(snapshot));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptLedger, snapshot.string() + ": " + e.what());
  }
  RunConfig cfg;
  try {
    cfg = j.at("config").get<RunConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptLedger, snapshot.string() + ": " + e.what());
  }
  cfg.output_dir = dir;
  return RunLedger(dir, std::move(cfg), j.at("digest").get<std::string>());
}

void RunLedger::write_inputs(std::span<const GuidingPhrase> seeds, std::span<const Question> train) {
  std::vector<json> s(seeds.begin(), seeds.end());
  std::vector<json> t(train.begin(), train.end());
  // train first: has_inputs() keys on seeds.jsonl
  write_jsonl_atomic(dir_ / "inputs" / "train.jsonl", t);
  write_jsonl_atomic(dir_ / "inputs" / "seeds.jsonl", s);
}

bool RunLedger::has_inputs() const { return fs::exists(dir_ / "inputs" / "seeds.jsonl"); }

std::vector<GuidingPhrase> RunLedger::read_seeds() const {
  std::vector<GuidingPhrase> out;
  for (const auto& j : read_jsonl(dir_ / "inputs" / "seeds.jsonl")) out.push_back(j.get<GuidingPhrase>());
  return out;
}

std::vector<Question> RunLedger::read_train() const {
  std::vector<Question> out;
  for (const auto& j : read_jsonl(dir_ / "inputs" / "train.jsonl")) out.push_back(j.get<Question>());
  return out;
}

void RunLedger::persist_initial_pool(const HistoryPool& pool, std::span<const ScoredPhrase> scored,
                                     std::span<const std::string> excluded,
                                     std::span<const double> best_by_round,
                                     const ScoredPhrase& best) {
  std::vector<json> lines;
  for (const auto& s : scored) {
    lines.push_back({{"event", "score"}, {"round", -1}, {"phrase", s.phrase}, {"breakdown", s.breakdown}});
  }
  for (const auto& id : excluded) lines.push_back({{"event", "score_failure"}, {"round", -1}, {"phrase_id", id}});
  lines.push_back(snapshot_event(0, pool, best, best_by_round, false));
  write_jsonl_atomic(dir_ / "initial_pool.jsonl", lines);
}

bool RunLedger::has_initial_pool() const { return fs::exists(dir_ / "initial_pool.jsonl"); }

void RunLedger::persist_round(const RoundRecord& rec) {
  if (!has_initial_pool()) {
    throw Error(ErrorCode::kInvalidArgument, "round persisted before the initial pool");
  }
  if (fs::exists(round_path(dir_, rec.round))) {
    throw Error(ErrorCode::kDuplicateRound, fmt::format("round {} is already recorded", rec.round));
  }
  const auto done = completed_rounds();
  const int expected = done.empty() ? 0 : done.back() + 1;
  if (rec.round != expected) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("round {} persisted out of order; expected {}", rec.round, expected));
  }

  const int r = rec.round;
  std::vector<json> lines;
  lines.push_back({{"event", "meta_prompt"},
                   {"round", r},
                   {"digest", rec.meta_prompt.digest()},
                   {"objective", rec.meta_prompt.objective_text},
                   {"history", rec.meta_prompt.history_block},
                   {"instructions", rec.meta_prompt.instruction_text}});
  for (const auto& c : rec.candidates) lines.push_back({{"event", "candidate"}, {"round", r}, {"phrase", c}});
  for (const auto& s : rec.scored) {
    lines.push_back({{"event", "score"}, {"round", r}, {"phrase", s.phrase}, {"breakdown", s.breakdown}});
  }
  for (const auto& id : rec.memo_hits) lines.push_back({{"event", "memo_hit"}, {"round", r}, {"phrase_id", id}});
  for (const auto& id : rec.score_failures) {
    lines.push_back({{"event", "score_failure"}, {"round", r}, {"phrase_id", id}});
  }
  lines.push_back({{"event", "filter"}, {"round", r}, {"merged", rec.merged}, {"evicted", rec.evicted}});
  lines.push_back(snapshot_event(r + 1, rec.pool_after, rec.best, rec.best_by_round, rec.degraded));
  write_jsonl_atomic(round_path(dir_, r), lines);
}

void RunLedger::write_summary(const OptimizationRun& run) {
  json rounds = json::array();
  for (const auto& s : run.rounds) rounds.push_back(summary_json(s));
  const json j{{"config_digest", digest_},
               {"stop_reason", to_string(run.stop_reason)},
               {"rounds_completed", run.rounds.size()},
               {"best", run.best},
               {"best_by_round", run.best_by_round},
               {"initial_pool", run.initial_pool},
               {"final_pool", run.final_pool},
               {"rounds", rounds}};
  write_text_atomic(dir_ / "run.json", j.dump(2) + "\n");
}

std::optional<OptimizationRun> RunLedger::read_summary() const {
  const fs::path path = dir_ / "run.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    const json j = json::parse(read_file(path));
    OptimizationRun run;
    run.config_snapshot = cfg_;
    run.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
    run.best = j.at("best").get<ScoredPhrase>();
    run.best_by_round = j.at("best_by_round").get<std::vector<double>>();
    run.initial_pool = j.at("initial_pool").get<HistoryPool>();
    run.final_pool = j.at("final_pool").get<HistoryPool>();
    for (const auto& r : j.at("rounds")) run.rounds.push_back(summary_from_json(r));
    return run;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptLedger, path.string() + ": " + e.what());
  }
}

std::vector<int> RunLedger::completed_rounds() const {
  static const std::regex kName(R"(round_(\d+)\.jsonl)");
  std::vector<int> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(rounds_dir(), ec)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, kName)) out.push_back(std::stoi(m[1].str()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ResumeState resume_run(const fs::path& run_dir, const std::optional<RunConfig>& current) {
  RunLedger ledger = RunLedger::open(run_dir);
  if (current && config_digest(*current) != ledger.config_digest()) {
    throw Error(ErrorCode::kConfigDrift,
                "config differs from the snapshot in " + run_dir.string() + "; refusing to resume");
  }
  if (!ledger.has_initial_pool()) {
    throw Error(ErrorCode::kIo, "run in " + run_dir.string() +
                                    " has no initial pool yet; rerun `potforge optimize`");
  }

  ResumeState state;
  state.config = ledger.config();
  auto absorb_scores = [&](const std::vector<json>& events) {
    for (const auto& e : events) {
      if (e.at("event") != "score") continue;
      ScoredPhrase s{e.at("phrase").get<GuidingPhrase>(), e.at("breakdown").get<ScoreBreakdown>()};
      state.memo.try_emplace(fold_case(s.phrase.text), std::move(s));
    }
  };
  auto find_snapshot = [](const std::vector<json>& events) -> const json* {
    for (auto it = events.rbegin(); it != events.rend(); ++it) {
      if (it->at("event") == "pool_snapshot") return &*it;
    }
    return nullptr;
  };

  try {
    const auto initial = read_jsonl(run_dir / "initial_pool.jsonl");
    const json* snap = find_snapshot(initial);
    if (!snap) throw Error(ErrorCode::kCorruptLedger, "initial_pool.jsonl has no pool snapshot");
    absorb_scores(initial);
    state.initial_pool = snap->at("pool").get<HistoryPool>();
    state.pool = state.initial_pool;
    state.best = snap->at("best").get<ScoredPhrase>();
    state.best_by_round = snap->at("best_by_round").get<std::vector<double>>();

    const auto on_disk = ledger.completed_rounds();
    for (std::size_t i = 0; i < on_disk.size(); ++i) {
      const int r = on_disk[i];
      if (r != static_cast<int>(i)) {
        throw Error(ErrorCode::kCorruptLedger, fmt::format("round files skip from {} to {}", i, r));
      }
      const auto events = read_jsonl(round_path(run_dir, r));
      const json* rs = find_snapshot(events);
      if (!rs) {
        if (i + 1 != on_disk.size()) {
          throw Error(ErrorCode::kCorruptLedger, fmt::format("round {} has no pool snapshot", r));
        }
        spdlog::warn("round {} was interrupted; it will run again", r);
        fs::remove(round_path(run_dir, r));
        break;
      }
      absorb_scores(events);
      RoundSummary summary;
      summary.round = r;
      for (const auto& e : events) {
        if (e.at("event") == "meta_prompt") summary.meta_prompt_digest = e.at("digest").get<std::string>();
        if (e.at("event") == "candidate") summary.candidates.push_back(e.at("phrase").get<GuidingPhrase>());
      }
      summary.pool_after = rs->at("pool").get<HistoryPool>();
      state.pool = summary.pool_after;
      state.best = rs->at("best").get<ScoredPhrase>();
      state.best_by_round = rs->at("best_by_round").get<std::vector<double>>();
      state.rounds.push_back(std::move(summary));
      state.next_round = r + 1;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptLedger, run_dir.string() + ": " + e.what());
  }
  state.finished = fs::exists(run_dir / "run.json");
  return state;
}

}  // namespace potforge
