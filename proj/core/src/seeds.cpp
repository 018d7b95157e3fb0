#include "potforge/seeds.hpp"

#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "potforge/error.hpp"

namespace potforge {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string json_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

const nlohmann::json* field(const nlohmann::json& obj, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (auto it = obj.find(n); it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

}  // namespace

std::vector<GuidingPhrase> generate_seeds(Gateway& gateway, const ModelEndpoint& generator,
                                          std::string_view template_text, int n,
                                          const SeedGenerationOptions& options) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "seed count must be >= 1");
  std::string prompt(template_text);
  for (auto pos = prompt.find("{n}"); pos != std::string::npos; pos = prompt.find("{n}")) {
    prompt.replace(pos, 3, std::to_string(n));
  }

  std::vector<GuidingPhrase> out;
  std::set<std::string> seen;
  std::size_t rejected = 0;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const auto record =
        gateway.complete(generator, prompt, options.temperature, options.seed + attempt);
    for (auto& text : split_phrase_list(record.answer_text)) {
      if (out.size() >= static_cast<std::size_t>(n)) break;
      if (auto why = phrase_violation(text, options.max_phrase_chars)) {
        spdlog::debug("generator phrase rejected: {}", *why);
        ++rejected;
        continue;
      }
      if (!seen.insert(fold_case(text)).second) continue;
      out.push_back({fmt::format("gen-{:03}", out.size() + 1), std::move(text),
                     PhraseOrigin::kGenerator, 0});
    }
    if (out.size() >= static_cast<std::size_t>(std::max(options.min_seeds, 1))) break;
  }
  if (out.size() < static_cast<std::size_t>(options.min_seeds) || out.empty()) {
    throw Error(ErrorCode::kGenerationUnderflow,
                fmt::format("generator produced {} valid phrases ({} rejected), need {}",
                            out.size(), rejected, options.min_seeds));
  }
  return out;
}

SeedSet load_seed_set(const std::filesystem::path& path, std::size_t max_phrase_chars) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read seed corpus " + path.string());
  SeedSet set;
  std::map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty() || text.starts_with('#')) continue;
    if (auto why = phrase_violation(text, max_phrase_chars)) {
      set.rejected.push_back({number, *why});
      continue;
    }
    const auto [it, fresh] = first_line.try_emplace(fold_case(text), number);
    if (!fresh) {
      set.rejected.push_back({number, fmt::format("duplicate of line {}", it->second)});
      continue;
    }
    set.phrases.push_back({fmt::format("seed-{:03}", set.phrases.size() + 1), text,
                           PhraseOrigin::kSeedCorpus, 0});
  }
  for (const auto& r : set.rejected) {
    spdlog::warn("{}:{}: {}", path.string(), r.line, r.reason);
  }
  if (set.phrases.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no valid phrases in " + path.string());
  }
  return set;
}

void write_seed_set(const std::filesystem::path& path, std::span<const GuidingPhrase> phrases) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& p : phrases) out << p.text << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<Question> load_questions(const std::filesystem::path& path,
                                     const std::string& dataset_tag) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read question file " + path.string());
  const std::string tag = dataset_tag.empty() ? path.stem().string() : dataset_tag;

  std::vector<Question> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kIo, fmt::format("{}:{}: {}", path.string(), number, e.what()));
    }
    if (!j.is_object()) {
      throw Error(ErrorCode::kIo, fmt::format("{}:{}: expected an object", path.string(), number));
    }

    Question q;
    q.dataset = tag;
    AnswerHint hint = AnswerHint::kAny;
    std::string answer;
    if (j.contains("Problem") && j.contains("options")) {
      // MathQA: the options are part of what the model must see
      q.text = trim(json_text(j["Problem"])) + "\nOptions: " + trim(json_text(j["options"]));
      if (const auto* c = field(j, {"correct"})) answer = json_text(*c);
      hint = AnswerHint::kChoice;
    } else if (const auto* t = field(j, {"question", "problem", "Problem"})) {
      q.text = trim(json_text(*t));
      if (const auto* a = field(j, {"answer", "Answer"})) answer = json_text(*a);
    }
    if (const auto* id = field(j, {"id", "unique_id", "ID"})) {
      q.id = json_text(*id);
    } else {
      q.id = fmt::format("{}-{:04}", tag, number);
    }
    if (q.text.empty()) {
      throw Error(ErrorCode::kIo, fmt::format("{}:{}: record has no question text",
                                              path.string(), number));
    }
    if (!ids.insert(q.id).second) {
      throw Error(ErrorCode::kIo, fmt::format("{}:{}: duplicate id '{}'", path.string(), number, q.id));
    }
    if (!trim(answer).empty()) q.ground_truth = canonicalize_answer(answer, hint);
    out.push_back(std::move(q));
  }
  return out;
}

InitialPoolResult build_initial_pool(std::span<const GuidingPhrase> seeds,
                                     std::span<const Question> train_questions,
                                     Scorer& scorer, int k_init) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seed phrases");
  if (train_questions.empty()) throw Error(ErrorCode::kInvalidArgument, "no training questions");
  if (k_init < 1) throw Error(ErrorCode::kInvalidArgument, "k_init must be >= 1");

  InitialPoolResult result;
  for (const auto& seed : seeds) {
    try {
      result.scored.push_back({seed, scorer.score(seed, train_questions)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAllQuestionsFailed) throw;
      spdlog::warn("seed {} excluded: {}", seed.id, e.what());
      result.excluded.push_back(seed.id);
    }
  }
  std::vector<ScoredPhrase> ranked = result.scored;
  normalize(ranked);
  if (ranked.size() > static_cast<std::size_t>(k_init)) ranked.resize(static_cast<std::size_t>(k_init));
  result.pool = HistoryPool{std::move(ranked), 0};
  return result;
}

}  // namespace potforge
